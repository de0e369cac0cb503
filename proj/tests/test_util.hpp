#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ps3/fsa.hpp"
#include "ps3/fsa_builders.hpp"
#include "ps3/scorer.hpp"
#include "ps3/vocabulary.hpp"

namespace ps3::testutil {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Deterministic pseudo-random conditional distributions keyed by the prefix.
class RandomScorer {
 public:
  RandomScorer(std::uint64_t seed, int vocab) : seed_(seed), vocab_(vocab) {}

  struct State {
    std::uint64_t key;
  };

  State start(const ContextVector&) const { return {splitmix64(seed_)}; }
  State advance(const State& s, TokenId t) const {
    return {splitmix64(s.key ^ (static_cast<std::uint64_t>(t) + 0x51ULL))};
  }
  Eigen::VectorXd next_logprobs(const State& s) const {
    Eigen::VectorXd logits(vocab_);
    std::uint64_t x = s.key;
    for (int i = 0; i < vocab_; ++i) {
      x = splitmix64(x);
      logits(i) = 4.0 * (to_unit(x) - 0.5);
    }
    return log_softmax(logits);
  }
  int vocab_size() const { return vocab_; }

 private:
  std::uint64_t seed_;
  int vocab_;
};

class UniformScorer {
 public:
  explicit UniformScorer(int vocab) : vocab_(vocab) {}

  struct State {};

  State start(const ContextVector&) const { return {}; }
  State advance(const State&, TokenId) const { return {}; }
  Eigen::VectorXd next_logprobs(const State&) const {
    return Eigen::VectorXd::Constant(vocab_, -std::log(static_cast<double>(vocab_)));
  }
  int vocab_size() const { return vocab_; }

 private:
  int vocab_;
};

// Puts almost all probability mass on one target sequence (then eos).
class TargetScorer {
 public:
  TargetScorer(std::vector<TokenId> target, int vocab)
      : target_(std::move(target)), vocab_(vocab) {}

  struct State {
    int depth = 0;
    bool on_track = true;
  };

  State start(const ContextVector&) const { return {}; }
  State advance(const State& s, TokenId t) const {
    const bool still = s.on_track && s.depth < static_cast<int>(target_.size()) &&
                       target_[static_cast<size_t>(s.depth)] == t;
    return {s.depth + 1, still};
  }
  Eigen::VectorXd next_logprobs(const State& s) const {
    Eigen::VectorXd logits = Eigen::VectorXd::Zero(vocab_);
    if (s.on_track) {
      const TokenId favored = s.depth < static_cast<int>(target_.size())
                                  ? target_[static_cast<size_t>(s.depth)]
                                  : vocab_ - 1;
      logits(favored) = 12.0;
    }
    return log_softmax(logits);
  }
  int vocab_size() const { return vocab_; }

 private:
  std::vector<TokenId> target_;
  int vocab_;
};

// --- direct predicates used as oracles against the builders ---------------

inline bool matches_pattern(std::span<const PatternItem> items,
                            std::span<const TokenId> seq) {
  std::function<bool(size_t, size_t)> go = [&](size_t item, size_t pos) -> bool {
    if (item == items.size()) {
      return pos == seq.size();
    }
    const PatternItem& it = items[item];
    if (it.kind == PatternItem::Kind::kWord) {
      return pos < seq.size() && it.word.contains(seq[pos]) && go(item + 1, pos + 1);
    }
    const size_t remaining = seq.size() - pos;
    const size_t hi = it.gap_max ? std::min<size_t>(static_cast<size_t>(*it.gap_max), remaining)
                                 : remaining;
    for (size_t k = static_cast<size_t>(it.gap_min); k <= hi; ++k) {
      if (go(item + 1, pos + k)) {
        return true;
      }
    }
    return false;
  };
  return go(0, 0);
}

inline bool contains_phrase(std::span<const TokenId> seq, std::span<const TokenId> phrase) {
  if (phrase.size() > seq.size()) {
    return false;
  }
  for (size_t i = 0; i + phrase.size() <= seq.size(); ++i) {
    bool hit = true;
    for (size_t j = 0; j < phrase.size(); ++j) {
      if (seq[i + j] != phrase[j]) {
        hit = false;
        break;
      }
    }
    if (hit) {
      return true;
    }
  }
  return false;
}

inline bool satisfies_m_of_n(std::span<const TokenId> seq,
                             std::span<const DisjunctiveSet> sets, int m) {
  int satisfied = 0;
  for (const auto& ds : sets) {
    for (TokenId t : seq) {
      if (ds.contains(t)) {
        ++satisfied;
        break;
      }
    }
  }
  return satisfied >= m;
}

// All content sequences of length 0..max_len, in (length, lex) order.
inline std::vector<std::vector<TokenId>> all_sequences(int alphabet, int max_len) {
  std::vector<std::vector<TokenId>> out = {{}};
  std::vector<std::vector<TokenId>> layer = {{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::vector<TokenId>> next;
    for (const auto& seq : layer) {
      for (TokenId t = 0; t < alphabet; ++t) {
        auto child = seq;
        child.push_back(t);
        next.push_back(child);
        out.push_back(std::move(child));
      }
    }
    layer = std::move(next);
  }
  return out;
}

// Random total automaton; may have an empty language.
inline Fsa random_fsa(std::mt19937_64& rng, int alphabet, int max_states) {
  const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_states));
  Fsa fsa;
  fsa.alphabet_size = alphabet;
  fsa.initial = 0;
  fsa.accepting.resize(static_cast<size_t>(n));
  fsa.labeled.resize(static_cast<size_t>(n));
  fsa.default_target.resize(static_cast<size_t>(n));
  for (int s = 0; s < n; ++s) {
    fsa.accepting[static_cast<size_t>(s)] = rng() % 5 < 2;
    fsa.default_target[static_cast<size_t>(s)] = static_cast<StateId>(rng() % n);
    for (TokenId t = 0; t < alphabet; ++t) {
      if (rng() % 10 < 3) {
        const StateId to = static_cast<StateId>(rng() % n);
        if (to != fsa.default_target[static_cast<size_t>(s)]) {
          fsa.labeled[static_cast<size_t>(s)].emplace(t, to);
        }
      }
    }
  }
  return fsa;
}

// k-state cycle accepting everything; multiplies state counts under
// intersection without changing the language.
inline Fsa universal_cycle(int alphabet, int k) {
  Fsa fsa;
  fsa.alphabet_size = alphabet;
  fsa.initial = 0;
  fsa.accepting.assign(static_cast<size_t>(k), true);
  fsa.labeled.resize(static_cast<size_t>(k));
  fsa.default_target.resize(static_cast<size_t>(k));
  for (int s = 0; s < k; ++s) {
    fsa.default_target[static_cast<size_t>(s)] = (s + 1) % k;
  }
  return fsa;
}

inline Vocabulary letters(int content) {
  std::vector<std::string> words;
  for (int i = 0; i < content; ++i) {
    words.push_back(std::string(1, static_cast<char>('a' + i)));
  }
  return build_vocabulary(words);
}

}  // namespace ps3::testutil
