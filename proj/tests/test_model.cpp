#include <doctest.h>

#include <cmath>

#include "ps3/errors.hpp"
#include "ps3/model.hpp"
#include "ps3/serialization.hpp"
#include "test_util.hpp"

using namespace ps3;
namespace tu = ps3::testutil;

namespace {

ContextVector zeros(int d) { return ContextVector::Zero(d); }

ModelParams uniform_zero_model(int vocab) {
  return allocate_model({4, 5, 3, vocab}, false);
}

std::vector<TokenId> with_eos(std::vector<TokenId> seq, const ModelParams& m) {
  seq.push_back(m.dims.vocab - 1);
  return seq;
}

}  // namespace

TEST_CASE("init is deterministic in the seed") {
  const ModelDims dims{4, 5, 3, 7};
  ModelParams a = init_model(dims, false, 42);
  ModelParams b = init_model(dims, false, 42);
  ModelParams c = init_model(dims, false, 43);
  auto va = param_views(a), vb = param_views(b), vc = param_views(c);
  bool same = true, differs = false;
  for (size_t i = 0; i < va.size(); ++i) {
    for (long j = 0; j < va[i].size; ++j) {
      same = same && va[i].data[j] == vb[i].data[j];
      differs = differs || va[i].data[j] != vc[i].data[j];
      CHECK(std::abs(va[i].data[j]) <= 0.1);
    }
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("tied head shapes follow the embedding size") {
  const ModelParams p = init_model({8, 16, 4, 20}, true, 1);
  CHECK(p.W_p.rows() == 8);
  CHECK(p.W_p.cols() == 16);
  CHECK(p.b_p.size() == 8);
  const ModelParams q = init_model({8, 16, 4, 20}, false, 1);
  CHECK(q.W_p.rows() == 20);
  CHECK(q.b_p.size() == 20);
}

TEST_CASE("init rejects bad dims") {
  CHECK_THROWS_AS(init_model({0, 5, 3, 7}, false, 1), ValidationError);
  CHECK_THROWS_AS(init_model({4, 5, 3, 1}, false, 1), ValidationError);
}

TEST_CASE("next-token distribution is normalized") {
  const ModelParams p = init_model({4, 5, 3, 7}, false, 11);
  const ContextVector ctx = ContextVector::Constant(3, 0.25);
  SUBCASE("empty prefix") {
    const Eigen::VectorXd lp = next_token_logprobs(p, ctx, std::vector<TokenId>{});
    CHECK(lp.size() == 7);
    CHECK(lp.array().exp().sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("longer prefix") {
    const Eigen::VectorXd lp =
        next_token_logprobs(p, ctx, std::vector<TokenId>{0, 3, 2, 2});
    CHECK(lp.array().exp().sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("eos in the prefix is invalid") {
    CHECK_THROWS_AS(next_token_logprobs(p, ctx, std::vector<TokenId>{0, 6}),
                    ValidationError);
  }
}

TEST_CASE("uniform-zero parameters give the uniform distribution") {
  const ModelParams p = uniform_zero_model(6);
  const Eigen::VectorXd lp = next_token_logprobs(p, zeros(3), std::vector<TokenId>{1});
  for (int i = 0; i < 6; ++i) {
    CHECK(lp(i) == doctest::Approx(-std::log(6.0)).epsilon(1e-15));
  }
}

TEST_CASE("sequence logprob") {
  const ModelParams p = init_model({4, 5, 3, 6}, false, 3);
  const ContextVector ctx = ContextVector::Constant(3, -0.5);
  const TokenId eos = 5;

  SUBCASE("single-token sequence is the first-step eos probability") {
    const double lp = sequence_logprob(p, ctx, std::vector<TokenId>{eos});
    const Eigen::VectorXd first = next_token_logprobs(p, ctx, std::vector<TokenId>{});
    CHECK(lp == doctest::Approx(first(eos)).epsilon(1e-12));
  }

  SUBCASE("additivity over steps") {
    const double whole = sequence_logprob(p, ctx, std::vector<TokenId>{0, 2, eos});
    const double sum = next_token_logprobs(p, ctx, std::vector<TokenId>{})(0) +
                       next_token_logprobs(p, ctx, std::vector<TokenId>{0})(2) +
                       next_token_logprobs(p, ctx, std::vector<TokenId>{0, 2})(eos);
    CHECK(whole == doctest::Approx(sum).epsilon(1e-12));
  }

  SUBCASE("uniform-zero closed form") {
    const ModelParams u = uniform_zero_model(6);
    const double lp = sequence_logprob(u, zeros(3), std::vector<TokenId>{1, 2, 3, eos});
    CHECK(lp == doctest::Approx(-4.0 * std::log(6.0)).epsilon(1e-12));
  }

  SUBCASE("malformed sequences error") {
    CHECK_THROWS_AS(sequence_logprob(p, ctx, std::vector<TokenId>{}), ValidationError);
    CHECK_THROWS_AS(sequence_logprob(p, ctx, std::vector<TokenId>{0, 1}), ValidationError);
    CHECK_THROWS_AS(sequence_logprob(p, ctx, std::vector<TokenId>{eos, 0, eos}),
                    ValidationError);
  }

  SUBCASE("always non-positive") {
    CHECK(sequence_logprob(p, ctx, std::vector<TokenId>{4, eos}) <= 0.0);
  }
}

TEST_CASE("hand-worked tied head forward pass") {
  ModelParams p = allocate_model({2, 2, 1, 2}, true);
  p.W_c << 0.5, -0.25;
  p.b_c << 0.3, -0.2;
  p.W_e << 1.0, 0.0, 0.0, 1.0;
  p.W_z << 0.1, 0.2, 0.0, -0.1;
  p.W_p << 1.0, 0.0, 0.0, 1.0;
  ContextVector ctx(1);
  ctx << 0.4;

  const Eigen::VectorXd lp = next_token_logprobs(p, ctx, std::vector<TokenId>{});
  CHECK(lp(0) == doctest::Approx(-0.5305638345434551).epsilon(1e-14));
  CHECK(lp(1) == doctest::Approx(-0.8873952257977549).epsilon(1e-14));
}

TEST_CASE("training descends on a fixed batch") {
  const Vocabulary v = tu::letters(5);
  ModelParams p = init_model({4, 6, 2, v.size()}, false, 9);
  const std::vector<TrainingPair> batch = {
      {ContextVector::Constant(2, 0.5), {0, 1, 2, v.eos_id()}},
      {ContextVector::Constant(2, -0.5), {2, 2, v.eos_id()}},
      {ContextVector::Zero(2), {4, v.eos_id()}},
  };
  const double initial = train_step(p, batch, {0.05, 1.0});
  double last = initial;
  for (int i = 0; i < 49; ++i) {
    last = train_step(p, batch, {0.05, 1.0});
  }
  CHECK(last < initial);
}

TEST_CASE("zero learning rate leaves parameters and loss unchanged") {
  ModelParams p = init_model({4, 5, 3, 6}, true, 21);
  const ModelParams before = p;
  const std::vector<TrainingPair> batch = {{zeros(3), {0, 1, 5}}};
  const double l1 = train_step(p, batch, {0.0, 1.0});
  const double l2 = train_step(p, batch, {0.0, 1.0});
  CHECK(l1 == l2);
  auto va = param_views(p), vb = param_views(before);
  for (size_t i = 0; i < va.size(); ++i) {
    for (long j = 0; j < va[i].size; ++j) {
      CHECK(va[i].data[j] == vb[i].data[j]);
    }
  }
}

TEST_CASE("uniform-zero loss equals mean length times log vocab") {
  ModelParams p = uniform_zero_model(6);
  const std::vector<TrainingPair> batch = {
      {zeros(3), with_eos({0, 1}, p)},       // length 3
      {zeros(3), with_eos({2, 3, 4, 0}, p)}  // length 5
  };
  const double loss = train_step(p, batch, {0.0, 1.0});
  CHECK(loss == doctest::Approx(4.0 * std::log(6.0)).epsilon(1e-12));
}

TEST_CASE("empty batch errors") {
  ModelParams p = init_model({4, 5, 3, 6}, false, 2);
  CHECK_THROWS_AS(train_step(p, {}, {0.1, 1.0}), ValidationError);
}

TEST_CASE("gradient check on both heads") {
  for (bool tied : {false, true}) {
    CAPTURE(tied);
    const ModelParams p = init_model({4, 5, 3, 7}, tied, tied ? 17 : 23);
    TrainingPair example{ContextVector::Constant(3, 0.3), {0, 4, 2, 6}};
    CHECK(gradient_check(p, example, 1e-5) < 1e-4);
  }
}

TEST_CASE("gradient check validates epsilon") {
  const ModelParams p = init_model({2, 2, 1, 3}, false, 5);
  TrainingPair example{zeros(1), {0, 2}};
  CHECK_THROWS_AS(gradient_check(p, example, 0.0), ValidationError);
  CHECK_THROWS_AS(gradient_check(p, example, 0.5), ValidationError);
}

TEST_CASE("fixed embeddings") {
  ModelParams p = init_model({3, 4, 2, 5}, true, 8);
  Eigen::MatrixXd table(3, 5);
  table.setConstant(0.25);
  table(0, 0) = -1.0;

  SUBCASE("loading keeps distributions normalized") {
    load_fixed_embeddings(p, table, false);
    const Eigen::VectorXd lp = next_token_logprobs(p, zeros(2), std::vector<TokenId>{0});
    CHECK(lp.array().exp().sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(p.freeze_embeddings);
  }

  SUBCASE("frozen embeddings never move") {
    load_fixed_embeddings(p, table, true);
    const Eigen::MatrixXd before = p.W_e;
    const std::vector<TrainingPair> batch = {{zeros(2), {1, 2, 4}}};
    for (int i = 0; i < 5; ++i) {
      train_step(p, batch, {0.1, 1.0});
    }
    CHECK(p.W_e == before);
  }

  SUBCASE("shape mismatch errors") {
    Eigen::MatrixXd bad(3, 4);
    bad.setZero();
    CHECK_THROWS_AS(load_fixed_embeddings(p, bad, true), ValidationError);
  }
}

TEST_CASE("embedding learning rate multiplier scales the update") {
  const std::vector<TrainingPair> batch = {{zeros(3), {0, 1, 5}}};
  ModelParams full = init_model({4, 5, 3, 6}, false, 31);
  ModelParams scaled = full;
  const ModelParams start = full;
  train_step(full, batch, {0.1, 1.0});
  train_step(scaled, batch, {0.1, 0.5});
  for (long j = 0; j < start.W_e.size(); ++j) {
    const double full_delta = full.W_e.data()[j] - start.W_e.data()[j];
    const double scaled_delta = scaled.W_e.data()[j] - start.W_e.data()[j];
    CHECK(scaled_delta == doctest::Approx(0.5 * full_delta).epsilon(1e-12));
  }
  // non-embedding tensors get the full update either way
  CHECK(full.W_p == scaled.W_p);
}

TEST_CASE("checkpoint json round trip is exact") {
  ModelParams p = init_model({4, 5, 3, 7}, true, 123);
  p.freeze_embeddings = true;
  const Json j = checkpoint_to_json(p);
  const ModelParams q = checkpoint_from_json(j);
  CHECK(q.dims.vocab == 7);
  CHECK(q.tied_output);
  CHECK(q.freeze_embeddings);
  CHECK(q.seed == 123);
  auto va = param_views(p), vb = param_views(q);
  for (size_t i = 0; i < va.size(); ++i) {
    REQUIRE(va[i].size == vb[i].size);
    for (long k = 0; k < va[i].size; ++k) {
      CHECK(va[i].data[k] == vb[i].data[k]);
    }
  }
  CHECK(checkpoint_to_json(q).dump() == j.dump());
}

TEST_CASE("model scorer matches the batch forward pass") {
  const ModelParams p = init_model({4, 6, 3, 6}, true, 77);
  const ContextVector ctx = ContextVector::Constant(3, 0.2);
  const std::vector<TokenId> seq = {1, 3, 0, 5};
  ModelScorer scorer(p);
  ModelScorer::State state = scorer.start(ctx);
  double incremental = 0.0;
  for (size_t t = 0; t < seq.size(); ++t) {
    incremental += scorer.next_logprobs(state)(seq[t]);
    if (t + 1 < seq.size()) {
      state = scorer.advance(state, seq[t]);
    }
  }
  CHECK(incremental == doctest::Approx(sequence_logprob(p, ctx, seq)).epsilon(1e-12));
}
