#include "ps3/trainer.hpp"

#include <algorithm>
#include <sstream>

#include "ps3/errors.hpp"
#include "ps3/fsa_builders.hpp"

namespace ps3 {

namespace {

void validate_ps3_config(const Ps3Config& cfg) {
  if (cfg.minibatch_size < 1) {
    throw ValidationError("minibatch size must be at least 1");
  }
  if (cfg.mix_complete < 0 || cfg.mix_partial < 0 ||
      cfg.mix_complete + cfg.mix_partial == 0) {
    throw ValidationError("mix ratio must have a positive total");
  }
  if (cfg.lr_initial < 0.0) {
    throw ValidationError("learning rate must be non-negative");
  }
  if (cfg.decode.mode != DecodeConfig::Mode::kEosTerminated) {
    throw ValidationError("training requires eos-terminated decoding");
  }
}

struct Pools {
  std::vector<size_t> complete;
  std::vector<size_t> partial;
};

Pools split_pools(std::span<const TrainingExample> dataset) {
  Pools pools;
  for (size_t i = 0; i < dataset.size(); ++i) {
    const auto& ex = dataset[i];
    if (ex.complete.has_value() == ex.partial.has_value()) {
      throw ValidationError("example '" + ex.id +
                            "' must carry exactly one of a complete sequence "
                            "or a partial constraint");
    }
    (ex.complete ? pools.complete : pools.partial).push_back(i);
  }
  return pools;
}

std::vector<size_t> pick_k_distinct(std::mt19937_64& rng, size_t n, size_t k) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) {
    idx[i] = i;
  }
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + static_cast<size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

// Fraction of partial instances whose unconstrained decode under the
// snapshot already satisfies its automaton; 1.0 when there are none.
double satisfaction_rate(const ModelParams& snapshot, const Vocabulary& vocab,
                         std::span<const PartialInstance> instances,
                         const DecodeConfig& cfg) {
  if (instances.empty()) {
    return 1.0;
  }
  ModelScorer scorer(snapshot);
  int satisfied = 0;
  for (const auto& inst : instances) {
    try {
      DecodeResult res = beam_search(scorer, inst.ctx, cfg, vocab);
      std::span<const TokenId> content(res.tokens.data(), res.tokens.size() - 1);
      if (inst.fsa.accepts(content)) {
        ++satisfied;
      }
    } catch (const DecodeFailure&) {
    }
  }
  return static_cast<double>(satisfied) / static_cast<double>(instances.size());
}

struct Step1Result {
  std::vector<TrainingPair> pairs;
  int failures = 0;
};

Step1Result run_step1(const ModelParams& snapshot,
                      std::span<const PartialInstance> instances,
                      const DecodeConfig& cfg) {
  Step1Result out;
  auto outcomes = complete_partial(snapshot, instances, cfg);
  for (size_t i = 0; i < outcomes.size(); ++i) {  // outcomes align with inputs
    if (outcomes[i].seq) {
      out.pairs.push_back({instances[i].ctx, std::move(*outcomes[i].seq)});
    } else {
      ++out.failures;
    }
  }
  return out;
}

}  // namespace

std::vector<CompletionOutcome> complete_partial(const ModelParams& snapshot,
                                                std::span<const PartialInstance> examples,
                                                const DecodeConfig& cfg) {
  ModelScorer scorer(snapshot);
  std::vector<CompletionOutcome> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    CompletionOutcome o;
    o.id = ex.id;
    try {
      o.seq = constrained_beam_search(scorer, ex.ctx, cfg, ex.fsa).tokens;
    } catch (const UnsatisfiableError& e) {
      o.error = e.what();
    } catch (const DecodeFailure& e) {
      o.error = e.what();
    }
    out.push_back(std::move(o));
  }
  return out;
}

Fsa instantiate_constraint(const PartialPayload& payload, const Vocabulary& vocab,
                           std::mt19937_64& rng) {
  if (payload.fixed) {
    return *payload.fixed;
  }
  if (payload.groups.empty()) {
    throw ValidationError("partial example has neither groups nor an automaton");
  }
  const size_t n = payload.groups.size();
  if (n <= 3) {
    const int m = static_cast<int>(std::min<size_t>(2, n));
    return build_at_least_m_of_n(vocab, payload.groups, m);
  }
  std::vector<DisjunctiveSet> chosen;
  for (size_t i : pick_k_distinct(rng, n, 3)) {
    chosen.push_back(payload.groups[i]);
  }
  return build_at_least_m_of_n(vocab, chosen, 2);
}

MinibatchIndices sample_minibatch(std::mt19937_64& rng, size_t complete_pool,
                                  size_t partial_pool, const Ps3Config& cfg) {
  if (complete_pool == 0 && partial_pool == 0) {
    throw ValidationError("cannot sample a minibatch from an empty dataset");
  }
  const int batch = cfg.minibatch_size;
  int n_complete;
  if (partial_pool == 0) {
    n_complete = batch;
  } else if (complete_pool == 0) {
    n_complete = 0;
  } else {
    n_complete = batch * cfg.mix_complete / (cfg.mix_complete + cfg.mix_partial);
  }
  MinibatchIndices out;
  for (int i = 0; i < n_complete; ++i) {
    out.complete.push_back(static_cast<size_t>(rng() % complete_pool));
  }
  for (int i = 0; i < batch - n_complete; ++i) {
    out.partial.push_back(static_cast<size_t>(rng() % partial_pool));
  }
  return out;
}

TrainReport train_supervised(ModelParams& model, const Vocabulary& vocab,
                             std::span<const TrainingExample> dataset, int steps,
                             const Ps3Config& cfg, std::mt19937_64& rng) {
  validate_ps3_config(cfg);
  Pools pools = split_pools(dataset);
  if (pools.complete.empty()) {
    throw ValidationError("supervised training needs complete examples");
  }
  (void)vocab;
  TrainReport report;
  for (int step = 0; step < steps; ++step) {
    MinibatchIndices idx = sample_minibatch(rng, pools.complete.size(), 0, cfg);
    std::vector<TrainingPair> batch;
    batch.reserve(idx.complete.size());
    for (size_t i : idx.complete) {
      const auto& ex = dataset[pools.complete[i]];
      batch.push_back({ex.ctx, *ex.complete});
    }
    const double lr = lr_at(cfg.lr_initial, step, steps);
    const double loss =
        train_step(model, batch, {lr, cfg.embedding_lr_multiplier});
    report.lines.push_back({step, loss, lr, 0, 1.0});
  }
  return report;
}

TrainReport ps3_online(ModelParams& model, const Vocabulary& vocab,
                       std::span<const TrainingExample> dataset, const Ps3Config& cfg,
                       const ResumePoint* resume, const CheckpointHook& on_checkpoint,
                       int checkpoint_every) {
  validate_ps3_config(cfg);
  Pools pools = split_pools(dataset);
  if (dataset.empty()) {
    throw ValidationError("dataset is empty");
  }

  std::mt19937_64 rng(cfg.seed);
  int first_step = 0;
  if (resume != nullptr) {
    first_step = resume->step;
    std::istringstream in(resume->rng_state);
    in >> rng;
    if (!in) {
      throw ValidationError("corrupt rng state in resume point");
    }
  } else if (!cfg.cold_start) {
    const int pretrain = cfg.pretrain_steps < 0 ? cfg.total_steps : cfg.pretrain_steps;
    if (pretrain > 0 && !pools.complete.empty()) {
      train_supervised(model, vocab, dataset, pretrain, cfg, rng);
    }
  }

  TrainReport report;
  for (int step = first_step; step < cfg.total_steps; ++step) {
    MinibatchIndices idx =
        sample_minibatch(rng, pools.complete.size(), pools.partial.size(), cfg);

    std::vector<TrainingPair> batch;
    batch.reserve(static_cast<size_t>(cfg.minibatch_size));
    for (size_t i : idx.complete) {
      const auto& ex = dataset[pools.complete[i]];
      batch.push_back({ex.ctx, *ex.complete});
    }

    std::vector<PartialInstance> instances;
    instances.reserve(idx.partial.size());
    for (size_t i : idx.partial) {
      const auto& ex = dataset[pools.partial[i]];
      instances.push_back({ex.id, ex.ctx, instantiate_constraint(*ex.partial, vocab, rng)});
    }

    // Step 1 against a frozen snapshot of the current parameters.
    int failures = 0;
    double rate = 1.0;
    if (!instances.empty()) {
      const ModelParams snapshot = model;
      Step1Result step1 = run_step1(snapshot, instances, cfg.decode);
      failures = step1.failures;
      rate = satisfaction_rate(snapshot, vocab, instances, cfg.decode);
      for (auto& pair : step1.pairs) {
        batch.push_back(std::move(pair));
      }
    }

    const double lr = lr_at(cfg.lr_initial, step, cfg.total_steps);
    double loss = 0.0;
    if (!batch.empty()) {
      loss = train_step(model, batch, {lr, cfg.embedding_lr_multiplier});
    }
    report.lines.push_back({step, loss, lr, failures, rate});

    if (on_checkpoint && checkpoint_every > 0 && (step + 1) % checkpoint_every == 0 &&
        step + 1 < cfg.total_steps) {
      std::ostringstream state;
      state << rng;
      on_checkpoint(step + 1, model, state.str());
    }
  }
  return report;
}

TrainReport ps3_offline(ModelParams& model, const Vocabulary& vocab,
                        std::span<const TrainingExample> dataset, const Ps3Config& cfg) {
  validate_ps3_config(cfg);
  Pools pools = split_pools(dataset);
  if (dataset.empty()) {
    throw ValidationError("dataset is empty");
  }

  std::mt19937_64 rng(cfg.seed);
  const int steps_per_iter =
      cfg.step2_steps_per_iter > 0
          ? cfg.step2_steps_per_iter
          : static_cast<int>((dataset.size() + static_cast<size_t>(cfg.minibatch_size) - 1) /
                             static_cast<size_t>(cfg.minibatch_size));
  const int total_updates = cfg.outer_iters * steps_per_iter;

  if (!cfg.cold_start) {
    const int pretrain = cfg.pretrain_steps < 0 ? total_updates : cfg.pretrain_steps;
    if (pretrain > 0 && !pools.complete.empty()) {
      train_supervised(model, vocab, dataset, pretrain, cfg, rng);
    }
  }

  TrainReport report;
  for (int iter = 0; iter < cfg.outer_iters; ++iter) {
    // Step 1: re-complete every partial example under the current snapshot;
    // completions are never cached across iterations.
    std::vector<PartialInstance> instances;
    instances.reserve(pools.partial.size());
    for (size_t i : pools.partial) {
      const auto& ex = dataset[i];
      instances.push_back({ex.id, ex.ctx, instantiate_constraint(*ex.partial, vocab, rng)});
    }
    const ModelParams snapshot = model;
    Step1Result step1 = run_step1(snapshot, instances, cfg.decode);
    if (!instances.empty() && step1.pairs.empty()) {
      report.aborted = true;
      report.abort_reason = "every partial example failed completion in iteration " +
                            std::to_string(iter);
      report.lines.push_back({iter, 0.0, lr_at(cfg.lr_initial, iter * steps_per_iter,
                                               total_updates),
                              step1.failures, 0.0});
      return report;
    }
    const double rate = satisfaction_rate(snapshot, vocab, instances, cfg.decode);

    // Step 2: minibatch SGD over the union of complete and completed data.
    std::vector<TrainingPair> pool;
    pool.reserve(pools.complete.size() + step1.pairs.size());
    for (size_t i : pools.complete) {
      pool.push_back({dataset[i].ctx, *dataset[i].complete});
    }
    for (auto& pair : step1.pairs) {
      pool.push_back(std::move(pair));
    }

    double loss_sum = 0.0;
    const double lr_first = lr_at(cfg.lr_initial, iter * steps_per_iter, total_updates);
    for (int k = 0; k < steps_per_iter; ++k) {
      MinibatchIndices idx = sample_minibatch(rng, pool.size(), 0, cfg);
      std::vector<TrainingPair> batch;
      batch.reserve(idx.complete.size());
      for (size_t i : idx.complete) {
        batch.push_back(pool[i]);
      }
      const double lr = lr_at(cfg.lr_initial, iter * steps_per_iter + k, total_updates);
      loss_sum += train_step(model, batch, {lr, cfg.embedding_lr_multiplier});
    }
    report.lines.push_back({iter, loss_sum / steps_per_iter, lr_first, step1.failures, rate});
  }
  return report;
}

TrainReport ps3_train(ModelParams& model, const Vocabulary& vocab,
                      std::span<const TrainingExample> dataset, const Ps3Config& cfg) {
  return cfg.mode == Ps3Config::Mode::kOnline
             ? ps3_online(model, vocab, dataset, cfg)
             : ps3_offline(model, vocab, dataset, cfg);
}

}  // namespace ps3
