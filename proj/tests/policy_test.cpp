// Copyright 2026 The kr1 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "kr1/errors.hpp"
#include "kr1/pipeline.hpp"
#include "kr1/policy.hpp"
#include "kr1/rng.hpp"
#include "oracles.hpp"

namespace {

// vocab 2, d 1: both embeddings 1, projection row [0, 1], bias 0.
kr1::PolicyParams two_token_policy() {
  kr1::PolicyParams p(2, 1);
  p.embedding(0)[0] = 1.0;
  p.embedding(1)[0] = 1.0;
  p.projection_row(0)[0] = 0.0;
  p.projection_row(0)[1] = 1.0;
  return p;
}

oracle::Net view(const kr1::PolicyParams& p) {
  return {static_cast<int>(p.vocab_size()), static_cast<int>(p.dim()), p.flat().data()};
}

}  // namespace

TEST(Policy, FlatLayoutSize) {
  kr1::PolicyParams p(7, 3);
  EXPECT_EQ(p.flat().size(), 7u * 3 + 3 * 7 + 7);
  EXPECT_EQ(p.bias_offset(), 42u);
  EXPECT_EQ(p.proj_offset(1), 28u);
}

TEST(Policy, ZeroParamsUniform) {
  kr1::PolicyParams p(5, 4);
  const kr1::TokenSeq prefix{1, 2};
  for (double z : kr1::logits(p, prefix)) EXPECT_EQ(z, 0.0);
  const auto lp = kr1::log_prob(p, prefix, kr1::TokenSeq{3});
  EXPECT_NEAR(lp.total, -std::log(5.0), 1e-15);
}

TEST(Policy, TwoTokenWorkedExample) {
  const auto p = two_token_policy();
  const auto z = kr1::logits(p, kr1::TokenSeq{0});
  EXPECT_EQ(z, (std::vector<double>{0.0, 1.0}));
  const double prob = std::exp(kr1::log_prob(p, kr1::TokenSeq{0}, kr1::TokenSeq{1}).total);
  EXPECT_NEAR(prob, 0.7311, 5e-5);
  EXPECT_NEAR(prob, 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
}

TEST(Policy, MeanFixedPoint) {
  auto p = kr1::PolicyParams::random(6, 3, 0.5, 4);
  const kr1::TokenSeq prefix{1, 2};
  // Make token 5's embedding equal the current prefix mean.
  for (int k = 0; k < 3; ++k) p.embedding(5)[k] = 0.5 * (p.embedding(1)[k] + p.embedding(2)[k]);
  const auto a = kr1::logits(p, prefix);
  const auto b = kr1::logits(p, kr1::TokenSeq{1, 2, 5});
  for (int v = 0; v < 6; ++v) EXPECT_NEAR(a[v], b[v], 1e-14);
}

TEST(Policy, OutOfVocabIsDomainError) {
  kr1::PolicyParams p(4, 2);
  EXPECT_THROW(kr1::logits(p, kr1::TokenSeq{4}), kr1::DomainError);
  EXPECT_THROW(kr1::logits(p, kr1::TokenSeq{}), kr1::DomainError);
}

TEST(Policy, LogProbMatchesOracleAndNormalizes) {
  const auto p = kr1::PolicyParams::random(12, 5, 0.7, 9);
  const kr1::TokenSeq prompt{1, 4, 7};
  const kr1::TokenSeq tokens{8, 3, 0};
  const auto lp = kr1::log_prob(p, prompt, tokens);
  const auto ref = view(p).token_log_probs(prompt, tokens);
  double total = 0;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    EXPECT_NEAR(lp.per_token[t], ref[t], 1e-13);
    EXPECT_LE(lp.per_token[t], 0.0);
    total += lp.per_token[t];
  }
  EXPECT_NEAR(lp.total, total, 1e-13);

  auto prefix = prompt;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    double mass = 0;
    for (kr1::Token v = 0; v < 12; ++v) mass += std::exp(kr1::log_prob(p, prefix, kr1::TokenSeq{v}).total);
    EXPECT_NEAR(mass, 1.0, 1e-12);
    prefix.push_back(tokens[t]);
  }
}

TEST(Policy, ContextChangesLogProb) {
  const auto p = kr1::PolicyParams::random(12, 5, 0.7, 10);
  const kr1::TokenSeq p_q{kr1::special::kQry, 5, 6};
  const kr1::TokenSeq p_ctx{kr1::special::kCtx, 5, 6, 9, kr1::special::kSep, kr1::special::kQry, 5, 6};
  EXPECT_NE(kr1::log_prob(p, p_q, kr1::TokenSeq{9, 0}).total, kr1::log_prob(p, p_ctx, kr1::TokenSeq{9, 0}).total);
}

TEST(Policy, BiasGradientIsOnehotMinusProbs) {
  const auto p = kr1::PolicyParams::random(6, 3, 0.5, 2);
  const kr1::TokenSeq prompt{2, 3};
  const auto g = kr1::grad_log_prob(p, prompt, kr1::TokenSeq{4});
  const auto probs = view(p).probs(prompt);
  for (int v = 0; v < 6; ++v) EXPECT_NEAR(g[p.bias_offset() + v], (v == 4 ? 1.0 : 0.0) - probs[v], 1e-14);
}

TEST(Policy, GradientMatchesOracle) {
  const auto p = kr1::PolicyParams::random(10, 4, 0.6, 3);
  const kr1::TokenSeq prompt{1, 5, 5, 7};
  const kr1::TokenSeq tokens{8, 2, 0};
  const auto g = kr1::grad_log_prob(p, prompt, tokens);
  std::vector<double> ref(g.size(), 0.0);
  view(p).add_grad(prompt, tokens, {1.0, 1.0, 1.0}, ref);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(g[k], ref[k], 1e-12) << k;
}

TEST(Policy, GradientMatchesFiniteDifferences) {
  auto p = kr1::PolicyParams::random(16, 6, 0.5, 5);
  const kr1::TokenSeq prompt{1, 6, 9};
  const kr1::TokenSeq tokens{11, 4, 0};
  const auto g = kr1::grad_log_prob(p, prompt, tokens);
  std::vector<double> theta(p.flat().begin(), p.flat().end());
  auto f = [&] {
    std::copy(theta.begin(), theta.end(), p.flat().begin());
    return kr1::log_prob(p, prompt, tokens).total;
  };
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> pick(0, theta.size() - 1);
  for (int i = 0; i < 100; ++i) {
    const auto k = pick(rng);
    EXPECT_LE(oracle::rel_error(g[k], oracle::central_difference(theta, k, 1e-5, f)), 1e-4) << k;
  }
}

TEST(Policy, SaturatedTokenHasNearZeroGradient) {
  kr1::PolicyParams p(4, 2);
  p.bias()[2] = 60.0;
  const auto g = kr1::grad_log_prob(p, kr1::TokenSeq{1}, kr1::TokenSeq{2});
  for (double x : g) EXPECT_LT(std::abs(x), 1e-20);
}

TEST(Policy, GreedyPicksArgmaxAndIgnoresRng) {
  const auto p = two_token_policy();
  kr1::SampleOptions opt;
  opt.greedy = true;
  opt.max_len = 4;
  for (std::uint64_t s = 0; s < 5; ++s) {
    kr1::Rng rng{s};
    EXPECT_EQ(kr1::sample(p, kr1::TokenSeq{0}, opt, rng), (kr1::TokenSeq{1, 1, 1, 1}));
  }
  // Tie between all tokens goes to the lowest id, which is EOS.
  kr1::PolicyParams flat(5, 2);
  EXPECT_EQ(kr1::greedy_decode(flat, kr1::TokenSeq{3}), (kr1::TokenSeq{kr1::special::kEos}));
}

TEST(Policy, SamplingDeterministicPerSeed) {
  const auto p = kr1::PolicyParams::random(9, 3, 1.0, 6);
  kr1::SampleOptions opt;
  EXPECT_EQ(opt.temperature, 0.9);
  for (std::uint64_t s = 0; s < 20; ++s) {
    kr1::Rng a{s, 1}, b{s, 1};
    const auto x = kr1::sample(p, kr1::TokenSeq{2}, opt, a);
    EXPECT_EQ(x, kr1::sample(p, kr1::TokenSeq{2}, opt, b));
    EXPECT_GE(x.size(), 1u);
    EXPECT_LE(x.size(), 3u);
    for (std::size_t t = 0; t + 1 < x.size(); ++t) EXPECT_NE(x[t], kr1::special::kEos);
  }
}

TEST(Policy, PretrainZeroEpochsIsNoOp) {
  const auto p = kr1::PolicyParams::random(8, 3, 0.3, 1);
  const std::vector<kr1::TrainingPair> pairs{{{1, 5}, {6, 0}}};
  EXPECT_EQ(kr1::pretrain(p, pairs, 0, 0.1).params, p);
}

TEST(Policy, PretrainSingleFact) {
  kr1::WorldSpec spec;
  spec.num_entities = 1;
  spec.num_attributes = 1;
  spec.belief_error_rate = 1.0;
  const auto w = kr1::generate_world(spec);
  const auto pairs = kr1::belief_pairs(w);
  ASSERT_EQ(pairs.size(), 1u);
  const auto res = kr1::pretrain(kr1::PolicyParams::random(w.vocab.size, 8, 0.1, 0), pairs, 500, 0.1);
  EXPECT_EQ(res.greedy_accuracy, 1.0);
  EXPECT_EQ(kr1::greedy_decode(res.params, pairs[0].prompt), pairs[0].target);
  EXPECT_EQ(pairs[0].target, (kr1::TokenSeq{w.facts[0].belief, kr1::special::kEos}));
}

TEST(Policy, CheckpointRoundTripAndVersion) {
  fixtures::TempDir dir;
  const auto p = kr1::PolicyParams::random(11, 4, 0.9, 8);
  kr1::save_policy(p, dir / "a.ckpt");
  const auto back = kr1::load_policy(dir / "a.ckpt");
  EXPECT_EQ(back, p);
  kr1::save_policy(back, dir / "b.ckpt");
  EXPECT_EQ(fixtures::slurp(dir / "a.ckpt"), fixtures::slurp(dir / "b.ckpt"));

  auto bytes = fixtures::slurp(dir / "a.ckpt");
  bytes[8] = 7;  // version field follows the 8-byte magic
  fixtures::spit(dir / "c.ckpt", bytes);
  EXPECT_THROW(kr1::load_policy(dir / "c.ckpt"), kr1::VersionError);
  fixtures::spit(dir / "d.ckpt", bytes.substr(0, 30));
  EXPECT_THROW(kr1::load_policy(dir / "d.ckpt"), kr1::Error);
}
