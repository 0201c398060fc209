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

#include <random>

#include <json.hpp>

#include "fixtures.hpp"
#include "kr1/errors.hpp"
#include "kr1/evalsuite.hpp"
#include "kr1/pipeline.hpp"
#include "oracles.hpp"
#include "toy_setup.hpp"

namespace {

kr1::PredictionRecord rec(std::int64_t id, bool ti, bool rag, bool te, bool sc = false) {
  return {id, ti, rag, te, sc};
}

// e1 (Ti,Fe), e2 (Fi,Te), e3 (Ti,Te), e4 (Fi,Fe) with rag = [1,0,1,0].
std::vector<kr1::PredictionRecord> four_records() {
  return {rec(1, true, true, false), rec(2, false, false, true), rec(3, true, true, true), rec(4, false, false, false)};
}

void expect_matches_oracle(const std::vector<kr1::PredictionRecord>& recs) {
  const auto report = kr1::evaluate_records(recs);
  const auto got = kr1::metric_values(report);
  const auto want = oracle::as_columns(oracle::metrics(recs));
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t c = 0; c < got.size(); ++c) {
    EXPECT_EQ(got[c].value.has_value(), want[c].has_value()) << kr1::metric_columns()[c];
    if (want[c]) {
      EXPECT_EQ(*got[c].value, *want[c]) << kr1::metric_columns()[c];
    }
  }
}

}  // namespace

TEST(Partition, StepFourFixture) {
  const auto s = kr1::partition(kr1::labels_from(four_records()));
  EXPECT_EQ(s.tife, (std::vector<std::size_t>{0}));
  EXPECT_EQ(s.fite, (std::vector<std::size_t>{1}));
  EXPECT_EQ(s.tite, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(s.fife, (std::vector<std::size_t>{3}));
  EXPECT_EQ(s.tite_strict, (std::vector<std::size_t>{2}));
  EXPECT_EQ(s.cq.size(), 4u);
  EXPECT_TRUE(s.scti.empty());
}

TEST(Partition, FixtureMetricsByHand) {
  const auto r = kr1::evaluate_records(four_records());
  EXPECT_EQ(*r.acc_cq.value, 0.5);
  EXPECT_EQ(*r.acc_tife.value, 1.0);
  EXPECT_EQ(*r.acc_fite.value, 0.0);
  EXPECT_EQ(*r.acc_fe.value, 0.5);
  EXPECT_EQ(*r.acc_te.value, 0.5);
  EXPECT_DOUBLE_EQ(*r.acc_tite.value, 2.0 / 3.0);
  EXPECT_EQ(*r.acc_fife.value, 0.0);
  EXPECT_EQ(*r.union_upper.value, 0.5);
  EXPECT_FALSE(r.acc_sc.value.has_value());
  EXPECT_EQ(r.acc_sc.size, 0u);
  EXPECT_EQ(kr1::format_metric(r.acc_scti), "");
}

TEST(Partition, SetLaws) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<kr1::PredictionRecord> recs;
    for (int i = 0; i < 16; ++i) recs.push_back(rec(i, rng() & 1, rng() & 1, rng() & 1, (rng() % 4) == 0));
    const auto s = kr1::partition(kr1::labels_from(recs));
    std::vector<int> fe_te(recs.size(), 0);
    for (auto i : s.fe) fe_te[i] += 1;
    for (auto i : s.te) fe_te[i] += 1;
    for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(fe_te[i], recs[i].self_conflict ? 0 : 1);
    for (auto i : s.tife) EXPECT_EQ(std::count(s.fite.begin(), s.fite.end(), i), 0);
    EXPECT_EQ(s.scti.size() + s.scfi.size() + s.cq.size(), recs.size());
  }
}

TEST(Metrics, AllCorrectIsOne) {
  auto recs = four_records();
  for (auto& r : recs) r.rag_correct = true;
  for (const auto& m : kr1::metric_values(kr1::evaluate_records(recs)))
    if (m.value) EXPECT_EQ(*m.value, 1.0);
}

TEST(Metrics, SelfConflictAverage) {
  std::vector<kr1::PredictionRecord> recs{rec(1, true, true, false, true), rec(2, true, false, true, true),
                                          rec(3, false, true, false, true), rec(4, true, true, true)};
  const auto r = kr1::evaluate_records(recs);
  EXPECT_EQ(*r.acc_scti.value, 0.5);
  EXPECT_EQ(*r.acc_scfi.value, 1.0);
  EXPECT_EQ(*r.acc_sc.value, 0.75);
  EXPECT_EQ(r.acc_cq.size, 1u);
  // Only one self-conflict subset present: the average falls back to it.
  recs.erase(recs.begin() + 2);
  EXPECT_EQ(*kr1::evaluate_records(recs).acc_sc.value, 0.5);
}

TEST(Metrics, RandomLabelingsMatchOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 16);
    std::vector<kr1::PredictionRecord> recs;
    for (int i = 0; i < n; ++i) recs.push_back(rec(i, rng() & 1, rng() & 1, rng() & 1, (rng() % 3) == 0));
    expect_matches_oracle(recs);
  }
  expect_matches_oracle({});
}

TEST(Metrics, CqIsWeightedMeanOfPartition) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<kr1::PredictionRecord> recs;
    for (int i = 0; i < 16; ++i) recs.push_back(rec(i, rng() & 1, rng() & 1, rng() & 1));
    const auto r = kr1::evaluate_records(recs);
    double acc = 0;
    for (const auto* m : {&r.acc_tife, &r.acc_fite, &r.acc_tite_strict, &r.acc_fife})
      if (m->value) acc += *m->value * m->size;
    EXPECT_NEAR(acc / 16.0, *r.acc_cq.value, 1e-12);
    EXPECT_GE(*r.union_upper.value, *r.acc_cq.value);
  }
}

TEST(UnionUpper, WorkedExamples) {
  EXPECT_EQ(kr1::union_upper_bound({1, 0, 1, 0}, {0, 0, 1, 1}), 0.75);
  EXPECT_EQ(kr1::union_upper_bound({1, 0, 1, 0}, {0, 0, 0, 0}), 0.5);
  EXPECT_EQ(kr1::union_upper_bound({1, 1}, {1, 1}), 1.0);
  EXPECT_THROW(kr1::union_upper_bound({1, 0}, {1}), kr1::ShapeError);
}

TEST(Labels, PretrainedPolicyTracksBeliefs) {
  for (double belief_error : {0.0, 1.0}) {
    kr1::WorldSpec spec;
    spec.num_entities = 1;
    spec.num_attributes = 2;
    spec.belief_error_rate = belief_error;
    const auto w = kr1::generate_world(spec);
    const auto fit = kr1::pretrain(kr1::PolicyParams::random(w.vocab.size, 8, 0.1, 0), kr1::belief_pairs(w), 500, 0.1);
    ASSERT_EQ(fit.greedy_accuracy, 1.0);
    const auto set = kr1::build_examples(w, 2, 0.5, 0.0, 1);
    const auto ti = kr1::label_parametric(fit.params, set.examples);
    for (bool t : ti) EXPECT_EQ(t, belief_error == 0.0);
    EXPECT_EQ(ti, kr1::label_parametric(fit.params, set.examples, kr1::Exec::kSerial));
  }
}

TEST(Predictions, SaveLoadRoundTrip) {
  fixtures::TempDir dir;
  const auto& t = fixtures::toy();
  const auto recs = kr1::predict(t.base, t.base, t.data.test.examples);
  ASSERT_EQ(recs.size(), t.data.test.examples.size());
  kr1::save_predictions(recs, dir / "p.jsonl");
  EXPECT_EQ(kr1::load_predictions(dir / "p.jsonl"), recs);
}

TEST(Report, FormatsAreStable) {
  const auto r = kr1::evaluate_records(four_records());
  const auto cols = kr1::metric_columns();
  EXPECT_EQ(cols.front(), "acc_cq");
  EXPECT_EQ(cols.back(), "union_upper");
  const auto header = kr1::csv_header();
  const auto row = kr1::csv_row(r);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_EQ(row.substr(0, 9), "0.500000,");
  const auto j = nlohmann::json::parse(kr1::report_json(r));
  EXPECT_TRUE(j["acc_scti"]["value"].is_null());
  EXPECT_EQ(j["acc_tite"]["size"], 3);
}
