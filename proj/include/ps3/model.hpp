#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ps3/scorer.hpp"
#include "ps3/vocabulary.hpp"

namespace ps3 {

struct ModelDims {
  int embed = 0;    // M
  int hidden = 0;   // N
  int context = 0;  // D
  int vocab = 0;    // |vocabulary| including eos
};

// Conditional autoregressive sequence model: a single gated recurrent cell
// whose initial hidden state is projected from the context vector, an
// embedding lookup of the previous token as input (eos doubles as the
// start symbol), and one of two output heads:
//   untied: logits = W_p h + b_p
//   tied:   logits = W_e^T tanh(W_p h + b_p)
struct ModelParams {
  ModelDims dims;
  bool tied_output = false;
  bool freeze_embeddings = false;
  std::uint64_t seed = 0;

  Eigen::MatrixXd W_e;               // embed x vocab
  Eigen::MatrixXd W_c;               // hidden x context
  Eigen::VectorXd b_c;
  Eigen::MatrixXd W_z, W_r, W_h;     // hidden x embed
  Eigen::MatrixXd U_z, U_r, U_h;     // hidden x hidden
  Eigen::VectorXd b_z, b_r, b_h;
  Eigen::MatrixXd W_p;               // (vocab|embed) x hidden
  Eigen::VectorXd b_p;
};

// Mutable flat view over one parameter tensor; the same fixed order backs
// initialization, SGD updates, gradient checks and checkpoints.
struct ParamView {
  std::string name;
  double* data;
  long size;
};
struct ConstParamView {
  std::string name;
  const double* data;
  long size;
};
std::vector<ParamView> param_views(ModelParams& params);
std::vector<ConstParamView> param_views(const ModelParams& params);

// Zero-initialized parameter tensors of the right shapes.
ModelParams allocate_model(const ModelDims& dims, bool tied);

ModelParams init_model(const ModelDims& dims, bool tied, std::uint64_t seed);

Eigen::VectorXd next_token_logprobs(const ModelParams& params, const ContextVector& ctx,
                                    std::span<const TokenId> prefix);

// Sum of per-step log-probabilities over a well-formed sequence (non-empty,
// eos exactly once, at the end).
double sequence_logprob(const ModelParams& params, const ContextVector& ctx,
                        std::span<const TokenId> seq);

struct TrainingPair {
  ContextVector ctx;
  std::vector<TokenId> seq;  // ends with eos
};

struct SgdOptions {
  double lr = 0.0;
  double embedding_lr_multiplier = 1.0;
};

// One SGD step on the mean per-sequence negative log-likelihood.
// Returns the pre-update loss. Frozen embeddings receive no update.
double train_step(ModelParams& params, std::span<const TrainingPair> batch,
                  const SgdOptions& opts);

// Max relative error between analytic gradients and central finite
// differences, over every parameter scalar.
double gradient_check(const ModelParams& params, const TrainingPair& example,
                      double epsilon);

void load_fixed_embeddings(ModelParams& params, const Eigen::MatrixXd& table, bool freeze);

// Incremental scorer over the model; the state is the hidden vector after
// consuming the start symbol and the prefix so far.
class ModelScorer {
 public:
  explicit ModelScorer(const ModelParams& params) : params_(&params) {}

  struct State {
    Eigen::VectorXd h;
  };

  State start(const ContextVector& ctx) const;
  State advance(const State& state, TokenId token) const;
  Eigen::VectorXd next_logprobs(const State& state) const;
  int vocab_size() const { return params_->dims.vocab; }

 private:
  const ModelParams* params_;
};

static_assert(SequenceScorer<ModelScorer>);

namespace detail {
// Gradient accumulation for one example; exposed for tests.
double accumulate_gradients(const ModelParams& params, const ContextVector& ctx,
                            std::span<const TokenId> seq, ModelParams& grads);
ModelParams zeros_like(const ModelParams& params);
void validate_sequence(const ModelParams& params, std::span<const TokenId> seq);
}  // namespace detail

}  // namespace ps3
