#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "ps3/decode.hpp"
#include "ps3/errors.hpp"
#include "ps3/fsa.hpp"
#include "ps3/scorer.hpp"

namespace ps3 {

// Exhaustive-search references for the decoders and builders. Correctness
// over speed; hard instance-size guards fail loudly instead of hanging.
inline constexpr double kOracleGuard = 1e7;

namespace oracle_detail {

inline void check_guard(int vocab_size, int max_len) {
  if (max_len < 0) {
    throw ValidationError("negative max_len");
  }
  if (std::pow(static_cast<double>(vocab_size), static_cast<double>(max_len)) >
      kOracleGuard) {
    throw GuardExceeded("search space " + std::to_string(vocab_size) + "^" +
                        std::to_string(max_len) + " exceeds the oracle guard");
  }
}

template <SequenceScorer S>
struct BestTracker {
  std::optional<DecodeResult> best;

  void offer(const std::vector<TokenId>& tokens, double logprob) {
    if (!best || logprob > best->logprob ||
        (logprob == best->logprob && tokens < best->tokens)) {
      best = DecodeResult{tokens, logprob};
    }
  }
};

template <SequenceScorer S>
void search(const S& scorer, const DecodeConfig& cfg, const Fsa* fsa,
            std::vector<TokenId>& tokens, const typename S::State& state,
            double cum, StateId fsa_state, BestTracker<S>& tracker) {
  const bool eos_mode = cfg.mode == DecodeConfig::Mode::kEosTerminated;
  const TokenId eos = scorer.vocab_size() - 1;
  const int depth = static_cast<int>(tokens.size());

  if (!eos_mode && depth == cfg.max_len) {
    if (fsa == nullptr || fsa->is_accepting(fsa_state)) {
      tracker.offer(tokens, cum);
    }
    return;
  }

  const Eigen::VectorXd lp = scorer.next_logprobs(state);
  if (eos_mode) {
    if (fsa == nullptr || fsa->is_accepting(fsa_state)) {
      tokens.push_back(eos);
      tracker.offer(tokens, cum + lp(eos));
      tokens.pop_back();
    }
    if (depth >= cfg.max_len - 1) {
      return;
    }
  }

  for (TokenId tok = 0; tok < eos; ++tok) {
    tokens.push_back(tok);
    search(scorer, cfg, fsa, tokens, scorer.advance(state, tok), cum + lp(tok),
           fsa == nullptr ? fsa_state : fsa->step(fsa_state, tok), tracker);
    tokens.pop_back();
  }
}

}  // namespace oracle_detail

// Exact argmax over every eos-terminated sequence of length at most max_len
// (or every length-max_len sequence in fixed-length mode), filtered by fsa
// acceptance when given. Ties are broken lexicographically by token ids,
// matching the decoders.
template <SequenceScorer S>
DecodeResult brute_force_best(const S& scorer, const ContextVector& ctx,
                              const DecodeConfig& cfg, const Vocabulary& vocab,
                              const Fsa* fsa = nullptr) {
  decode_detail::validate_config(cfg);
  if (scorer.vocab_size() != vocab.size()) {
    throw ValidationError("scorer and vocabulary disagree on size");
  }
  if (fsa != nullptr && fsa->alphabet_size != vocab.content_size()) {
    throw ValidationError("automaton and vocabulary disagree on alphabet");
  }
  oracle_detail::check_guard(vocab.size(), cfg.max_len);

  oracle_detail::BestTracker<S> tracker;
  std::vector<TokenId> tokens;
  oracle_detail::search(scorer, cfg, fsa, tokens, scorer.start(ctx), 0.0,
                        fsa == nullptr ? 0 : fsa->initial, tracker);
  if (!tracker.best) {
    throw UnsatisfiableError("empty language: no accepted sequence within budget");
  }
  return *tracker.best;
}

// All accepted sequences of length at most max_len, ordered by length then
// lexicographically. `limit` stops the enumeration early (0 = no limit).
std::vector<std::vector<TokenId>> enumerate_language(const Fsa& fsa,
                                                     const Vocabulary& vocab,
                                                     int max_len, size_t limit = 0);

}  // namespace ps3
