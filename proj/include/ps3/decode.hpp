#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ps3/errors.hpp"
#include "ps3/fsa.hpp"
#include "ps3/scorer.hpp"
#include "ps3/vocabulary.hpp"

namespace ps3 {

struct DecodeConfig {
  enum class Mode {
    kEosTerminated,  // hypotheses finish by emitting eos; only finished ones are returnable
    kFixedLength,    // exactly max_len content tokens, no end symbol
  };
  int beam_size = 5;
  int max_len = 16;
  Mode mode = Mode::kEosTerminated;
  // When > 0, each source beam's extension pool is pre-pruned to
  // beam_size * per_source_prune candidates before routing. Off by default
  // since it can change results at small beam sizes.
  int per_source_prune = 0;
};

struct DecodeResult {
  std::vector<TokenId> tokens;  // includes the final eos in eos-terminated mode
  double logprob = 0.0;
};

namespace decode_detail {

inline void validate_config(const DecodeConfig& cfg) {
  if (cfg.beam_size < 1) {
    throw ValidationError("beam size must be at least 1");
  }
  if (cfg.max_len < 1) {
    throw ValidationError("max_len must be at least 1");
  }
  if (cfg.per_source_prune < 0) {
    throw ValidationError("per_source_prune must be non-negative");
  }
}

template <typename State>
struct Hyp {
  std::vector<TokenId> tokens;
  double logprob = 0.0;
  State state;
  bool finished = false;
};

// A candidate references its parent hypothesis instead of materializing the
// token vector; carryovers re-enter an already finished hypothesis.
struct Candidate {
  double logprob = 0.0;
  int src_beam = 0;
  int src_slot = 0;
  TokenId token = -1;
  bool carryover = false;
  bool finishes = false;
};

template <typename State>
class CandidateOrder {
 public:
  explicit CandidateOrder(const std::vector<std::vector<Hyp<State>>>& beams)
      : beams_(&beams) {}

  // Strict total order: higher logprob first, ties broken by lexicographic
  // token-id sequence so every selection is deterministic.
  bool operator()(const Candidate& a, const Candidate& b) const {
    if (a.logprob != b.logprob) {
      return a.logprob > b.logprob;
    }
    const size_t la = length(a), lb = length(b);
    for (size_t i = 0; i < std::min(la, lb); ++i) {
      const TokenId ta = token_at(a, i), tb = token_at(b, i);
      if (ta != tb) {
        return ta < tb;
      }
    }
    return la < lb;
  }

  size_t length(const Candidate& c) const {
    const auto& parent = (*beams_)[static_cast<size_t>(c.src_beam)][static_cast<size_t>(c.src_slot)];
    return c.carryover ? parent.tokens.size() : parent.tokens.size() + 1;
  }

  TokenId token_at(const Candidate& c, size_t i) const {
    const auto& parent = (*beams_)[static_cast<size_t>(c.src_beam)][static_cast<size_t>(c.src_slot)];
    return i < parent.tokens.size() ? parent.tokens[i] : c.token;
  }

 private:
  const std::vector<std::vector<Hyp<State>>>* beams_;
};

template <typename State, typename S>
Hyp<State> materialize(const S& scorer, const std::vector<std::vector<Hyp<State>>>& beams,
                       const Candidate& c) {
  const auto& parent = beams[static_cast<size_t>(c.src_beam)][static_cast<size_t>(c.src_slot)];
  if (c.carryover) {
    return parent;
  }
  Hyp<State> out;
  out.tokens = parent.tokens;
  out.tokens.push_back(c.token);
  out.logprob = c.logprob;
  out.finished = c.finishes;
  out.state = c.finishes ? parent.state : scorer.advance(parent.state, c.token);
  return out;
}

template <typename State>
void take_top(std::vector<Candidate>& pool, int k, const CandidateOrder<State>& order) {
  if (static_cast<int>(pool.size()) > k) {
    std::nth_element(pool.begin(), pool.begin() + k, pool.end(), order);
    pool.resize(static_cast<size_t>(k));
  }
  std::sort(pool.begin(), pool.end(), order);
}

}  // namespace decode_detail

// Plain beam search: a single beam of the most probable extensions per step.
// In eos-terminated mode finished hypotheses stay in the beam, unextended,
// competing on cumulative log-probability.
template <SequenceScorer S>
DecodeResult beam_search(const S& scorer, const ContextVector& ctx,
                         const DecodeConfig& cfg, const Vocabulary& vocab) {
  using State = typename S::State;
  namespace dd = decode_detail;
  dd::validate_config(cfg);
  if (scorer.vocab_size() != vocab.size()) {
    throw ValidationError("scorer and vocabulary disagree on size");
  }
  const TokenId eos = vocab.eos_id();
  const int content = vocab.content_size();
  const bool eos_mode = cfg.mode == DecodeConfig::Mode::kEosTerminated;

  std::vector<std::vector<dd::Hyp<State>>> beams(1);
  beams[0].push_back({{}, 0.0, scorer.start(ctx), false});

  for (int t = 0; t < cfg.max_len; ++t) {
    std::vector<dd::Candidate> pool;
    for (int slot = 0; slot < static_cast<int>(beams[0].size()); ++slot) {
      const auto& hyp = beams[0][static_cast<size_t>(slot)];
      if (hyp.finished) {
        pool.push_back({hyp.logprob, 0, slot, -1, true, false});
        continue;
      }
      const Eigen::VectorXd lp = scorer.next_logprobs(hyp.state);
      for (TokenId tok = 0; tok < content; ++tok) {
        pool.push_back({hyp.logprob + lp(tok), 0, slot, tok, false, false});
      }
      if (eos_mode) {
        pool.push_back({hyp.logprob + lp(eos), 0, slot, eos, false, true});
      }
    }
    dd::CandidateOrder<State> order(beams);
    dd::take_top(pool, cfg.beam_size, order);
    std::vector<dd::Hyp<State>> next;
    next.reserve(pool.size());
    for (const auto& c : pool) {
      next.push_back(dd::materialize(scorer, beams, c));
    }
    beams[0] = std::move(next);
  }

  const dd::Hyp<State>* best = nullptr;
  for (const auto& hyp : beams[0]) {
    if (eos_mode && !hyp.finished) {
      continue;
    }
    if (best == nullptr || hyp.logprob > best->logprob ||
        (hyp.logprob == best->logprob && hyp.tokens < best->tokens)) {
      best = &hyp;
    }
  }
  if (best == nullptr) {
    throw DecodeFailure("no finished hypothesis within " +
                        std::to_string(cfg.max_len) + " steps");
  }
  return {best->tokens, best->logprob};
}

// Constrained beam search: one beam per automaton state; extensions are
// routed through the transition function to the target state's candidate
// pool and each state keeps its top beam_size. The returned sequence is
// guaranteed to be accepted. Hypotheses may emit eos only from an accepting
// state, and finished hypotheses are held in their state's beam.
template <SequenceScorer S>
DecodeResult constrained_beam_search(const S& scorer, const ContextVector& ctx,
                                     const DecodeConfig& cfg, const Fsa& fsa) {
  using State = typename S::State;
  namespace dd = decode_detail;
  dd::validate_config(cfg);
  if (scorer.vocab_size() != fsa.alphabet_size + 1) {
    throw ValidationError("scorer and automaton disagree on vocabulary size");
  }
  const TokenId eos = fsa.alphabet_size;
  const bool eos_mode = cfg.mode == DecodeConfig::Mode::kEosTerminated;
  const int content_budget = eos_mode ? cfg.max_len - 1 : cfg.max_len;
  if (!language_nonempty(fsa, content_budget)) {
    throw UnsatisfiableError("constraint admits no sequence within " +
                             std::to_string(content_budget) + " content tokens");
  }

  const int num_states = fsa.num_states();
  // Dense transition rows; cheaper than per-token map lookups in the loop.
  std::vector<std::vector<StateId>> row(static_cast<size_t>(num_states));
  for (StateId s = 0; s < num_states; ++s) {
    row[static_cast<size_t>(s)].resize(static_cast<size_t>(fsa.alphabet_size));
    for (TokenId tok = 0; tok < fsa.alphabet_size; ++tok) {
      row[static_cast<size_t>(s)][static_cast<size_t>(tok)] = fsa.step(s, tok);
    }
  }

  std::vector<std::vector<dd::Hyp<State>>> beams(static_cast<size_t>(num_states));
  beams[static_cast<size_t>(fsa.initial)].push_back({{}, 0.0, scorer.start(ctx), false});

  for (int t = 0; t < cfg.max_len; ++t) {
    std::vector<std::vector<dd::Candidate>> pools(static_cast<size_t>(num_states));
    dd::CandidateOrder<State> order(beams);
    for (StateId s = 0; s < num_states; ++s) {
      std::vector<dd::Candidate> local;
      auto& sink = cfg.per_source_prune > 0 ? local : pools[static_cast<size_t>(s)];
      for (int slot = 0; slot < static_cast<int>(beams[static_cast<size_t>(s)].size()); ++slot) {
        const auto& hyp = beams[static_cast<size_t>(s)][static_cast<size_t>(slot)];
        if (hyp.finished) {
          pools[static_cast<size_t>(s)].push_back({hyp.logprob, s, slot, -1, true, false});
          continue;
        }
        const Eigen::VectorXd lp = scorer.next_logprobs(hyp.state);
        for (TokenId tok = 0; tok < fsa.alphabet_size; ++tok) {
          sink.push_back({hyp.logprob + lp(tok), s, slot, tok, false, false});
        }
        if (eos_mode && fsa.is_accepting(s)) {
          pools[static_cast<size_t>(s)].push_back(
              {hyp.logprob + lp(eos), s, slot, eos, false, true});
        }
      }
      if (cfg.per_source_prune > 0) {
        dd::take_top(local, cfg.beam_size * cfg.per_source_prune, order);
        for (const auto& c : local) {
          pools[static_cast<size_t>(row[static_cast<size_t>(s)][static_cast<size_t>(c.token)])]
              .push_back(c);
        }
      }
    }
    if (cfg.per_source_prune == 0) {
      // Full expansion: route every candidate by the transition function.
      std::vector<std::vector<dd::Candidate>> routed(static_cast<size_t>(num_states));
      for (StateId s = 0; s < num_states; ++s) {
        for (const auto& c : pools[static_cast<size_t>(s)]) {
          StateId target = (c.carryover || c.finishes)
                               ? s
                               : row[static_cast<size_t>(s)][static_cast<size_t>(c.token)];
          routed[static_cast<size_t>(target)].push_back(c);
        }
      }
      pools = std::move(routed);
    }

    std::vector<std::vector<dd::Hyp<State>>> next(static_cast<size_t>(num_states));
    for (StateId s = 0; s < num_states; ++s) {
      auto& pool = pools[static_cast<size_t>(s)];
      dd::take_top(pool, cfg.beam_size, order);
      next[static_cast<size_t>(s)].reserve(pool.size());
      for (const auto& c : pool) {
        next[static_cast<size_t>(s)].push_back(dd::materialize(scorer, beams, c));
      }
    }
    beams = std::move(next);
  }

  const dd::Hyp<State>* best = nullptr;
  for (StateId s = 0; s < num_states; ++s) {
    if (!fsa.is_accepting(s)) {
      continue;
    }
    for (const auto& hyp : beams[static_cast<size_t>(s)]) {
      if (eos_mode && !hyp.finished) {
        continue;
      }
      if (best == nullptr || hyp.logprob > best->logprob ||
          (hyp.logprob == best->logprob && hyp.tokens < best->tokens)) {
        best = &hyp;
      }
    }
  }
  if (best == nullptr) {
    throw DecodeFailure("no accepted finished hypothesis; beam too small or "
                        "horizon too short");
  }
  return {best->tokens, best->logprob};
}

enum class DecodeErrorKind { kNone, kValidation, kUnsatisfiable, kDecodeFailure };

struct BatchItem {
  ContextVector ctx;
  std::optional<Fsa> fsa;  // absent: unconstrained
};

struct BatchOutcome {
  std::optional<DecodeResult> result;
  DecodeErrorKind error_kind = DecodeErrorKind::kNone;
  std::string error;
};

// Element-wise decoding; per-element failures are collected, not fatal.
template <SequenceScorer S>
std::vector<BatchOutcome> decode_batch(const S& scorer, std::span<const BatchItem> items,
                                       const DecodeConfig& cfg, const Vocabulary& vocab) {
  std::vector<BatchOutcome> out(items.size());
  for (size_t i = 0; i < items.size(); ++i) {
    BatchOutcome& o = out[i];
    try {
      o.result = items[i].fsa
                     ? constrained_beam_search(scorer, items[i].ctx, cfg, *items[i].fsa)
                     : beam_search(scorer, items[i].ctx, cfg, vocab);
    } catch (const UnsatisfiableError& e) {
      o.error_kind = DecodeErrorKind::kUnsatisfiable;
      o.error = e.what();
    } catch (const DecodeFailure& e) {
      o.error_kind = DecodeErrorKind::kDecodeFailure;
      o.error = e.what();
    } catch (const ValidationError& e) {
      o.error_kind = DecodeErrorKind::kValidation;
      o.error = e.what();
    }
  }
  return out;
}

}  // namespace ps3
