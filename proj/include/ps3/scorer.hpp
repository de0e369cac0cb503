#pragma once

#include <Eigen/Dense>
#include <concepts>

#include "ps3/vocabulary.hpp"

namespace ps3 {

// Fixed per-example conditioning vector (stands in for pooled image features).
using ContextVector = Eigen::VectorXd;

inline Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

// Anything that factorizes sequence probability one token at a time can
// drive the decoders: an opaque state advanced token by token, and a full
// next-token log-distribution per state. The eos symbol is always the last
// vocabulary id.
template <typename S>
concept SequenceScorer = requires(const S& s, const typename S::State& st,
                                  const ContextVector& ctx, TokenId tok) {
  { s.start(ctx) } -> std::convertible_to<typename S::State>;
  { s.advance(st, tok) } -> std::convertible_to<typename S::State>;
  { s.next_logprobs(st) } -> std::convertible_to<Eigen::VectorXd>;
  { s.vocab_size() } -> std::convertible_to<int>;
};

}  // namespace ps3
