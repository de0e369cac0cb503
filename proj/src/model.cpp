#include "ps3/model.hpp"

#include <cmath>
#include <random>

#include "ps3/errors.hpp"

namespace ps3 {

namespace {

Eigen::ArrayXd sigmoid(const Eigen::VectorXd& a) {
  return 1.0 / (1.0 + (-a.array()).exp());
}

struct StepCache {
  TokenId input = 0;
  Eigen::VectorXd h_prev;
  Eigen::VectorXd z, r, hc, h;
};

Eigen::VectorXd start_hidden(const ModelParams& p, const ContextVector& ctx) {
  if (ctx.size() != p.dims.context) {
    throw ValidationError("context vector has dim " + std::to_string(ctx.size()) +
                          ", model expects " + std::to_string(p.dims.context));
  }
  return (p.W_c * ctx + p.b_c).array().tanh();
}

StepCache gru_step(const ModelParams& p, TokenId input, Eigen::VectorXd h_prev) {
  StepCache c;
  c.input = input;
  const auto x = p.W_e.col(input);
  c.z = sigmoid(p.W_z * x + p.U_z * h_prev + p.b_z);
  c.r = sigmoid(p.W_r * x + p.U_r * h_prev + p.b_r);
  c.hc = (p.W_h * x + p.U_h * (c.r.array() * h_prev.array()).matrix() + p.b_h)
             .array()
             .tanh();
  c.h = ((1.0 - c.z.array()) * h_prev.array() + c.z.array() * c.hc.array()).matrix();
  c.h_prev = std::move(h_prev);
  return c;
}

// Returns log-probs; for the tied head also yields the tanh bottleneck v.
Eigen::VectorXd head_logprobs(const ModelParams& p, const Eigen::VectorXd& h,
                              Eigen::VectorXd* v_out = nullptr) {
  if (p.tied_output) {
    Eigen::VectorXd v = (p.W_p * h + p.b_p).array().tanh();
    Eigen::VectorXd logits = p.W_e.transpose() * v;
    if (v_out != nullptr) {
      *v_out = std::move(v);
    }
    return log_softmax(logits);
  }
  return log_softmax(p.W_p * h + p.b_p);
}

std::uint64_t head_rows(const ModelDims& dims, bool tied) {
  return static_cast<std::uint64_t>(tied ? dims.embed : dims.vocab);
}

}  // namespace

std::vector<ConstParamView> param_views(const ModelParams& p) {
  std::vector<ConstParamView> out;
  for (const auto& view : param_views(const_cast<ModelParams&>(p))) {
    out.push_back({view.name, view.data, view.size});
  }
  return out;
}

std::vector<ParamView> param_views(ModelParams& p) {
  std::vector<ParamView> v;
  auto add = [&v](const char* name, auto& tensor) {
    v.push_back({name, tensor.data(), static_cast<long>(tensor.size())});
  };
  add("W_e", p.W_e);
  add("W_c", p.W_c);
  add("b_c", p.b_c);
  add("W_z", p.W_z);
  add("U_z", p.U_z);
  add("b_z", p.b_z);
  add("W_r", p.W_r);
  add("U_r", p.U_r);
  add("b_r", p.b_r);
  add("W_h", p.W_h);
  add("U_h", p.U_h);
  add("b_h", p.b_h);
  add("W_p", p.W_p);
  add("b_p", p.b_p);
  return v;
}

ModelParams allocate_model(const ModelDims& dims, bool tied) {
  if (dims.embed < 1 || dims.hidden < 1 || dims.context < 1 || dims.vocab < 2) {
    throw ValidationError("model dims must be positive (vocab at least 2)");
  }
  ModelParams p;
  p.dims = dims;
  p.tied_output = tied;
  const long M = dims.embed, N = dims.hidden, D = dims.context, V = dims.vocab;
  const long H = static_cast<long>(head_rows(dims, tied));
  p.W_e.setZero(M, V);
  p.W_c.setZero(N, D);
  p.b_c.setZero(N);
  p.W_z.setZero(N, M);
  p.U_z.setZero(N, N);
  p.b_z.setZero(N);
  p.W_r.setZero(N, M);
  p.U_r.setZero(N, N);
  p.b_r.setZero(N);
  p.W_h.setZero(N, M);
  p.U_h.setZero(N, N);
  p.b_h.setZero(N);
  p.W_p.setZero(H, N);
  p.b_p.setZero(H);
  return p;
}

ModelParams init_model(const ModelDims& dims, bool tied, std::uint64_t seed) {
  ModelParams p = allocate_model(dims, tied);
  p.seed = seed;

  // Raw 53-bit draws instead of std::uniform_real_distribution keep the
  // stream identical across standard library implementations.
  std::mt19937_64 rng(seed);
  for (auto& view : param_views(p)) {
    for (long i = 0; i < view.size; ++i) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      view.data[i] = -0.1 + 0.2 * u;
    }
  }
  return p;
}

namespace detail {

void validate_sequence(const ModelParams& p, std::span<const TokenId> seq) {
  if (seq.empty()) {
    throw ValidationError("sequence is empty");
  }
  const TokenId eos = p.dims.vocab - 1;
  for (size_t i = 0; i < seq.size(); ++i) {
    if (seq[i] < 0 || seq[i] >= p.dims.vocab) {
      throw ValidationError("sequence token out of range");
    }
    if (seq[i] == eos && i + 1 != seq.size()) {
      throw ValidationError("eos appears before the end of the sequence");
    }
  }
  if (seq.back() != eos) {
    throw ValidationError("sequence does not end with eos");
  }
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams g = p;
  for (auto& view : param_views(g)) {
    std::fill(view.data, view.data + view.size, 0.0);
  }
  return g;
}

double accumulate_gradients(const ModelParams& p, const ContextVector& ctx,
                            std::span<const TokenId> seq, ModelParams& g) {
  validate_sequence(p, seq);
  const TokenId eos = p.dims.vocab - 1;
  const size_t T = seq.size();

  Eigen::VectorXd h0 = start_hidden(p, ctx);
  std::vector<StepCache> steps;
  steps.reserve(T);
  std::vector<Eigen::VectorXd> logprobs(T), bottleneck(T);
  double nll = 0.0;
  Eigen::VectorXd h = h0;
  for (size_t t = 0; t < T; ++t) {
    const TokenId input = t == 0 ? eos : seq[t - 1];
    steps.push_back(gru_step(p, input, std::move(h)));
    h = steps.back().h;
    logprobs[t] = head_logprobs(p, h, p.tied_output ? &bottleneck[t] : nullptr);
    nll -= logprobs[t](seq[t]);
  }

  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(p.dims.hidden);
  for (size_t ti = T; ti-- > 0;) {
    const StepCache& c = steps[ti];
    Eigen::VectorXd dlogits = logprobs[ti].array().exp();
    dlogits(seq[ti]) -= 1.0;

    Eigen::VectorXd dh;
    if (p.tied_output) {
      const Eigen::VectorXd& v = bottleneck[ti];
      g.W_e += v * dlogits.transpose();
      Eigen::VectorXd da =
          ((p.W_e * dlogits).array() * (1.0 - v.array().square())).matrix();
      g.W_p += da * c.h.transpose();
      g.b_p += da;
      dh = p.W_p.transpose() * da + dh_next;
    } else {
      g.W_p += dlogits * c.h.transpose();
      g.b_p += dlogits;
      dh = p.W_p.transpose() * dlogits + dh_next;
    }

    Eigen::VectorXd dz = (dh.array() * (c.hc - c.h_prev).array()).matrix();
    Eigen::VectorXd dhc = (dh.array() * c.z.array()).matrix();
    Eigen::VectorXd dh_prev = (dh.array() * (1.0 - c.z.array())).matrix();

    Eigen::VectorXd dah = (dhc.array() * (1.0 - c.hc.array().square())).matrix();
    const auto x = p.W_e.col(c.input);
    g.W_h += dah * x.transpose();
    g.U_h += dah * (c.r.array() * c.h_prev.array()).matrix().transpose();
    g.b_h += dah;
    Eigen::VectorXd drh = p.U_h.transpose() * dah;
    Eigen::VectorXd dr = (drh.array() * c.h_prev.array()).matrix();
    dh_prev += (drh.array() * c.r.array()).matrix();

    Eigen::VectorXd daz = (dz.array() * c.z.array() * (1.0 - c.z.array())).matrix();
    Eigen::VectorXd dar = (dr.array() * c.r.array() * (1.0 - c.r.array())).matrix();
    g.W_z += daz * x.transpose();
    g.U_z += daz * c.h_prev.transpose();
    g.b_z += daz;
    g.W_r += dar * x.transpose();
    g.U_r += dar * c.h_prev.transpose();
    g.b_r += dar;
    dh_prev += p.U_z.transpose() * daz + p.U_r.transpose() * dar;

    g.W_e.col(c.input) +=
        p.W_z.transpose() * daz + p.W_r.transpose() * dar + p.W_h.transpose() * dah;
    dh_next = std::move(dh_prev);
  }

  Eigen::VectorXd da0 = (dh_next.array() * (1.0 - h0.array().square())).matrix();
  g.W_c += da0 * ctx.transpose();
  g.b_c += da0;
  return nll;
}

}  // namespace detail

Eigen::VectorXd next_token_logprobs(const ModelParams& p, const ContextVector& ctx,
                                    std::span<const TokenId> prefix) {
  const TokenId eos = p.dims.vocab - 1;
  for (TokenId t : prefix) {
    if (t < 0 || t >= p.dims.vocab) {
      throw ValidationError("prefix token out of range");
    }
    if (t == eos) {
      throw ValidationError("prefix contains eos; the sequence is already finished");
    }
  }
  ModelScorer scorer(p);
  ModelScorer::State state = scorer.start(ctx);
  for (TokenId t : prefix) {
    state = scorer.advance(state, t);
  }
  return scorer.next_logprobs(state);
}

double sequence_logprob(const ModelParams& p, const ContextVector& ctx,
                        std::span<const TokenId> seq) {
  detail::validate_sequence(p, seq);
  ModelScorer scorer(p);
  ModelScorer::State state = scorer.start(ctx);
  double total = 0.0;
  for (size_t t = 0; t < seq.size(); ++t) {
    total += scorer.next_logprobs(state)(seq[t]);
    if (t + 1 < seq.size()) {
      state = scorer.advance(state, seq[t]);
    }
  }
  return total;
}

double train_step(ModelParams& params, std::span<const TrainingPair> batch,
                  const SgdOptions& opts) {
  if (batch.empty()) {
    throw ValidationError("train_step: empty batch");
  }
  if (opts.lr < 0.0) {
    throw ValidationError("train_step: negative learning rate");
  }
  ModelParams grads = detail::zeros_like(params);
  double loss = 0.0;
  for (const auto& ex : batch) {
    loss += detail::accumulate_gradients(params, ex.ctx, ex.seq, grads);
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  loss *= scale;

  auto pviews = param_views(params);
  auto gviews = param_views(grads);
  for (size_t i = 0; i < pviews.size(); ++i) {
    double lr = opts.lr;
    if (pviews[i].name == "W_e") {
      if (params.freeze_embeddings) {
        continue;
      }
      lr *= opts.embedding_lr_multiplier;
    }
    for (long j = 0; j < pviews[i].size; ++j) {
      pviews[i].data[j] -= lr * scale * gviews[i].data[j];
    }
  }
  return loss;
}

double gradient_check(const ModelParams& params, const TrainingPair& example,
                      double epsilon) {
  if (epsilon <= 0.0 || epsilon > 1e-2) {
    throw ValidationError("gradient_check: epsilon must be in (0, 1e-2]");
  }
  ModelParams grads = detail::zeros_like(params);
  detail::accumulate_gradients(params, example.ctx, example.seq, grads);

  // The finite-difference side goes through the incremental scorer path, so
  // the check also cross-validates the two forward implementations.
  ModelParams probe = params;
  auto views = param_views(probe);
  auto gviews = param_views(grads);
  double worst = 0.0;
  for (size_t i = 0; i < views.size(); ++i) {
    for (long j = 0; j < views[i].size; ++j) {
      const double saved = views[i].data[j];
      views[i].data[j] = saved + epsilon;
      const double up = -sequence_logprob(probe, example.ctx, example.seq);
      views[i].data[j] = saved - epsilon;
      const double down = -sequence_logprob(probe, example.ctx, example.seq);
      views[i].data[j] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double analytic = gviews[i].data[j];
      const double denom = std::max({1.0, std::abs(numeric), std::abs(analytic)});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
  }
  return worst;
}

void load_fixed_embeddings(ModelParams& params, const Eigen::MatrixXd& table, bool freeze) {
  if (table.rows() != params.dims.embed || table.cols() != params.dims.vocab) {
    throw ValidationError("embedding table shape mismatch: expected " +
                          std::to_string(params.dims.embed) + "x" +
                          std::to_string(params.dims.vocab));
  }
  params.W_e = table;
  params.freeze_embeddings = freeze;
}

ModelScorer::State ModelScorer::start(const ContextVector& ctx) const {
  const TokenId eos = params_->dims.vocab - 1;
  StepCache c = gru_step(*params_, eos, start_hidden(*params_, ctx));
  return State{std::move(c.h)};
}

ModelScorer::State ModelScorer::advance(const State& state, TokenId token) const {
  if (token < 0 || token >= params_->dims.vocab - 1) {
    throw ValidationError("scorer advanced with a non-content token");
  }
  StepCache c = gru_step(*params_, token, state.h);
  return State{std::move(c.h)};
}

Eigen::VectorXd ModelScorer::next_logprobs(const State& state) const {
  return head_logprobs(*params_, state.h);
}

}  // namespace ps3
