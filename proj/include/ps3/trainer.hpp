#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ps3/decode.hpp"
#include "ps3/fsa.hpp"
#include "ps3/model.hpp"
#include "ps3/vocabulary.hpp"

namespace ps3 {

// A partially-specified target: either label groups that get compiled into
// an at-least-m-of-n automaton (resampling 3 of them per draw when more are
// attached), or an explicit automaton.
struct PartialPayload {
  std::vector<DisjunctiveSet> groups;
  std::optional<Fsa> fixed;
};

struct TrainingExample {
  std::string id;
  ContextVector ctx;
  std::optional<std::vector<TokenId>> complete;  // ends with eos
  std::optional<PartialPayload> partial;
};

struct Ps3Config {
  enum class Mode { kOffline, kOnline };
  Mode mode = Mode::kOnline;

  int total_steps = 100;         // online
  int outer_iters = 5;           // offline
  int step2_steps_per_iter = 0;  // offline; 0 = one pass worth of minibatches

  int minibatch_size = 100;
  int mix_complete = 1;  // complete : partial minibatch ratio
  int mix_partial = 1;

  DecodeConfig decode;  // beam_size 5 by default

  double lr_initial = 0.001;  // decays linearly to zero over the update budget
  double embedding_lr_multiplier = 0.1;

  // The model is pre-trained on the complete subset before the first
  // completion pass; -1 sizes the pre-training budget like the main phase.
  int pretrain_steps = -1;
  bool cold_start = false;

  std::uint64_t seed = 0;
};

struct StepReport {
  int iter = 0;
  double loss = 0.0;
  double lr = 0.0;
  int step1_failures = 0;
  double constraint_satisfaction_rate = 1.0;
};

struct TrainReport {
  std::vector<StepReport> lines;
  bool aborted = false;
  std::string abort_reason;
};

struct PartialInstance {
  std::string id;
  ContextVector ctx;
  Fsa fsa;
};

struct CompletionOutcome {
  std::string id;
  std::optional<std::vector<TokenId>> seq;  // ends with eos
  std::string error;
};

// Step 1: map each partial example to the most probable accepted sequence
// under a frozen parameter snapshot. Per-example failures are recorded, not
// fatal.
std::vector<CompletionOutcome> complete_partial(const ModelParams& snapshot,
                                                std::span<const PartialInstance> examples,
                                                const DecodeConfig& cfg);

// Materialize the automaton for one partial example, resampling 3 label
// groups when more are attached. Consumes rng draws only in that case.
Fsa instantiate_constraint(const PartialPayload& payload, const Vocabulary& vocab,
                           std::mt19937_64& rng);

// Draw a minibatch honoring the configured complete:partial ratio; when one
// pool is empty the batch is filled from the other.
struct MinibatchIndices {
  std::vector<size_t> complete;
  std::vector<size_t> partial;
};
MinibatchIndices sample_minibatch(std::mt19937_64& rng, size_t complete_pool,
                                  size_t partial_pool, const Ps3Config& cfg);

inline double lr_at(double lr_initial, int step, int total_steps) {
  return lr_initial * (1.0 - static_cast<double>(step) / static_cast<double>(total_steps));
}

// Plain maximum-likelihood minibatch training on complete examples; also the
// pre-training phase and the complete-only baseline.
TrainReport train_supervised(ModelParams& model, const Vocabulary& vocab,
                             std::span<const TrainingExample> dataset, int steps,
                             const Ps3Config& cfg, std::mt19937_64& rng);

// Serializable training position for checkpoint/resume.
struct ResumePoint {
  int step = 0;
  std::string rng_state;
};

using CheckpointHook =
    std::function<void(int step, const ModelParams&, const std::string& rng_state)>;

TrainReport ps3_online(ModelParams& model, const Vocabulary& vocab,
                       std::span<const TrainingExample> dataset, const Ps3Config& cfg,
                       const ResumePoint* resume = nullptr,
                       const CheckpointHook& on_checkpoint = {},
                       int checkpoint_every = 0);

TrainReport ps3_offline(ModelParams& model, const Vocabulary& vocab,
                        std::span<const TrainingExample> dataset, const Ps3Config& cfg);

TrainReport ps3_train(ModelParams& model, const Vocabulary& vocab,
                      std::span<const TrainingExample> dataset, const Ps3Config& cfg);

}  // namespace ps3
