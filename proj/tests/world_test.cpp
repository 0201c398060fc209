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

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "kr1/errors.hpp"
#include "kr1/evalsuite.hpp"
#include "kr1/pipeline.hpp"
#include "kr1/world.hpp"

namespace {

kr1::WorldSpec small_spec(std::int64_t ne, std::int64_t na, double belief_error) {
  kr1::WorldSpec s;
  s.num_entities = ne;
  s.num_attributes = na;
  s.belief_error_rate = belief_error;
  return s;
}

// Value asserted by a passage is its last token.
kr1::Token asserted(const kr1::TokenSeq& passage) { return passage.back(); }

}  // namespace

TEST(World, ZeroBeliefErrorCopiesGold) {
  const auto w = kr1::generate_world(small_spec(2, 1, 0.0));
  ASSERT_EQ(w.num_keys(), 2u);
  for (const auto& f : w.facts) EXPECT_EQ(f.belief, f.gold);
}

TEST(World, FullBeliefErrorDivergesEverywhere) {
  const auto w = kr1::generate_world(small_spec(5, 3, 1.0));
  for (const auto& f : w.facts) {
    EXPECT_NE(f.belief, f.gold);
    EXPECT_GE(f.belief, w.vocab.value_begin(f.attribute));
    EXPECT_LT(f.belief, w.vocab.value_end(f.attribute));
  }
}

TEST(World, DivergenceMatchesRate) {
  for (double rate : {0.1, 0.33, 0.5, 0.77}) {
    const auto w = kr1::generate_world(small_spec(20, 10, rate));
    const auto wrong = std::count_if(w.facts.begin(), w.facts.end(), [](auto& f) { return f.belief != f.gold; });
    EXPECT_LE(std::abs(static_cast<double>(wrong) - rate * 200.0), 1.0) << rate;
  }
}

TEST(World, GenerationIsByteDeterministic) {
  fixtures::TempDir dir;
  const auto spec = small_spec(20, 10, 0.5);
  kr1::save_world(kr1::generate_world(spec), dir / "a.jsonl");
  kr1::save_world(kr1::generate_world(spec), dir / "b.jsonl");
  EXPECT_EQ(fixtures::slurp(dir / "a.jsonl"), fixtures::slurp(dir / "b.jsonl"));
  auto other = spec;
  other.seed = 8;
  kr1::save_world(kr1::generate_world(other), dir / "c.jsonl");
  EXPECT_NE(fixtures::slurp(dir / "a.jsonl"), fixtures::slurp(dir / "c.jsonl"));
}

TEST(World, VocabTooSmallNamesMinimum) {
  auto spec = small_spec(3, 2, 0.5);
  spec.vocab_size = spec.required_vocab() - 1;
  try {
    kr1::generate_world(spec);
    FAIL() << "expected capacity error";
  } catch (const kr1::CapacityError& e) {
    EXPECT_NE(std::string(e.what()).find(std::to_string(spec.required_vocab())), std::string::npos) << e.what();
  }
}

TEST(World, RatesOutsideUnitIntervalRejected) {
  auto spec = small_spec(3, 2, 1.5);
  EXPECT_THROW(kr1::generate_world(spec), kr1::DomainError);
}

TEST(World, VocabRangesDisjoint) {
  const auto w = kr1::generate_world(small_spec(4, 3, 0.5));
  std::set<kr1::Token> seen;
  for (std::int64_t e = 0; e < 4; ++e) EXPECT_TRUE(seen.insert(w.vocab.entity(e)).second);
  for (std::int64_t a = 0; a < 3; ++a) EXPECT_TRUE(seen.insert(w.vocab.attribute(a)).second);
  for (std::int64_t a = 0; a < 3; ++a)
    for (auto t = w.vocab.value_begin(a); t < w.vocab.value_end(a); ++t) EXPECT_TRUE(seen.insert(t).second);
  EXPECT_EQ(*seen.begin(), kr1::special::kCount);
  EXPECT_EQ(static_cast<std::int64_t>(*seen.rbegin()) + 1, w.vocab.size);
}

TEST(Examples, ContextErrorRateIsExact) {
  const auto w = kr1::generate_world(small_spec(4, 2, 0.5));
  const auto set = kr1::build_examples(w, 4, 0.5, 0.0, 3);
  const auto fe = std::count_if(set.examples.begin(), set.examples.end(), [](auto& e) { return !e.context_correct; });
  EXPECT_EQ(fe, 2);
}

TEST(Examples, SelfConflictCarriesTwoDistinctValues) {
  const auto w = kr1::generate_world(small_spec(6, 4, 0.5));
  const auto set = kr1::build_examples(w, 24, 0.5, 1.0, 5);
  for (const auto& ex : set.examples) {
    EXPECT_TRUE(ex.self_conflict);
    ASSERT_GE(ex.contexts.size(), 2u);
    std::set<kr1::Token> values;
    for (const auto& c : ex.contexts) values.insert(asserted(c));
    EXPECT_GE(values.size(), 2u);
  }
}

TEST(Examples, LabelSoundnessAndCounterfactualRange) {
  const auto w = kr1::generate_world(small_spec(20, 10, 0.5));
  for (double sc : {0.0, 0.3}) {
    const auto set = kr1::build_examples(w, 200, 0.5, sc, 11);
    for (const auto& ex : set.examples) {
      const auto gold = ex.gold_answer.at(0);
      const auto attr = (ex.query.at(1) - w.vocab.attribute(0));
      bool has_gold = false;
      for (const auto& c : ex.contexts) {
        ASSERT_EQ(c.size(), 3u);
        EXPECT_EQ(c[0], ex.query[0]);
        EXPECT_EQ(c[1], ex.query[1]);
        EXPECT_GE(asserted(c), w.vocab.value_begin(attr));
        EXPECT_LT(asserted(c), w.vocab.value_end(attr));
        has_gold |= asserted(c) == gold;
      }
      EXPECT_EQ(has_gold, ex.context_correct) << ex.id;
      if (!ex.context_correct) {
        for (const auto& c : ex.contexts) EXPECT_NE(asserted(c), gold);
      }
    }
  }
}

TEST(Examples, TooManyRequestedIsCapacityError) {
  const auto w = kr1::generate_world(small_spec(2, 2, 0.5));
  EXPECT_THROW(kr1::build_examples(w, 5, 0.5, 0.0, 1), kr1::CapacityError);
}

TEST(Examples, IdsUniqueAndSplitsDisjoint) {
  const auto w = kr1::generate_world(small_spec(20, 10, 0.5));
  for (auto keys : {kr1::TestKeys::kShared, kr1::TestKeys::kDisjoint}) {
    const auto data = kr1::make_dataset(w, 80, 60, keys, 4);
    std::set<std::int64_t> ids;
    for (const auto& e : data.train.examples) EXPECT_TRUE(ids.insert(e.id).second);
    for (const auto& e : data.test.examples) EXPECT_TRUE(ids.insert(e.id).second);
    EXPECT_EQ(data.train.split, kr1::Split::kTrain);
    EXPECT_EQ(data.test.split, kr1::Split::kTest);
  }
}

TEST(Prompts, EmptyContexts) {
  kr1::Example ex;
  ex.query = {10, 20};
  const auto pp = kr1::make_prompts(ex);
  EXPECT_EQ(pp.p, (kr1::TokenSeq{kr1::special::kQry, 10, 20}));
  EXPECT_EQ(pp.p_ctx, (kr1::TokenSeq{kr1::special::kCtx, kr1::special::kSep, kr1::special::kQry, 10, 20}));
}

TEST(Prompts, OnePassageLength) {
  kr1::Example ex;
  ex.query = {10, 20};
  ex.contexts = {{10, 20, 30}};
  const auto pp = kr1::make_prompts(ex);
  EXPECT_EQ(pp.p_ctx.size(), pp.p.size() + 3 + 2);
  EXPECT_EQ(pp.p_ctx,
            (kr1::TokenSeq{kr1::special::kCtx, 10, 20, 30, kr1::special::kSep, kr1::special::kQry, 10, 20}));
}

TEST(Prompts, QueryPromptIsSuffix) {
  const auto w = kr1::generate_world(small_spec(20, 10, 0.5));
  const auto set = kr1::build_examples(w, 100, 0.5, 0.3, 9);
  for (const auto& ex : set.examples) {
    const auto pp = kr1::make_prompts(ex);
    ASSERT_GT(pp.p_ctx.size(), pp.p.size());
    EXPECT_TRUE(std::equal(pp.p.rbegin(), pp.p.rend(), pp.p_ctx.rbegin()));
  }
}

TEST(Files, WorldAndExamplesRoundTrip) {
  fixtures::TempDir dir;
  const auto w = kr1::generate_world(small_spec(6, 3, 0.5));
  kr1::save_world(w, dir / "w.jsonl");
  const auto back = kr1::load_world(dir / "w.jsonl");
  EXPECT_EQ(back.facts, w.facts);
  EXPECT_EQ(back.vocab.size, w.vocab.size);

  auto set = kr1::build_examples(w, 10, 0.5, 0.4, 2);
  set.split = kr1::Split::kTest;
  kr1::save_examples(set, dir / "e.jsonl");
  const auto loaded = kr1::load_examples(dir / "e.jsonl");
  EXPECT_EQ(loaded.split, kr1::Split::kTest);
  EXPECT_EQ(loaded.examples, set.examples);
  kr1::save_examples(loaded, dir / "e2.jsonl");
  EXPECT_EQ(fixtures::slurp(dir / "e.jsonl"), fixtures::slurp(dir / "e2.jsonl"));
}

TEST(Files, DuplicateExampleIdRejected) {
  fixtures::TempDir dir;
  const auto w = kr1::generate_world(small_spec(6, 3, 0.5));
  auto set = kr1::build_examples(w, 3, 0.5, 0.0, 2);
  set.examples[2].id = set.examples[0].id;
  kr1::save_examples(set, dir / "e.jsonl");
  EXPECT_THROW(kr1::load_examples(dir / "e.jsonl"), kr1::ConflictError);
}

namespace {

std::string pred_line(int id, bool qo = true) {
  return std::string("{\"id\":") + std::to_string(id) + ",\"query_only_correct\":" + (qo ? "true" : "false") +
         ",\"rag_correct\":false,\"context_correct\":true,\"self_conflict\":false}\n";
}

}  // namespace

TEST(Predictions, EmptyFileGivesNoRecords) {
  fixtures::TempDir dir;
  fixtures::spit(dir / "p.jsonl", "");
  EXPECT_TRUE(kr1::load_predictions(dir / "p.jsonl").empty());
}

TEST(Predictions, OrderPreserved) {
  fixtures::TempDir dir;
  fixtures::spit(dir / "p.jsonl", pred_line(9, false) + pred_line(4));
  const auto recs = kr1::load_predictions(dir / "p.jsonl");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].id, 9);
  EXPECT_FALSE(recs[0].query_only_correct);
  EXPECT_EQ(recs[1].id, 4);
}

TEST(Predictions, DuplicateCitesBothLines) {
  fixtures::TempDir dir;
  std::string text;
  for (int line = 1; line <= 8; ++line) text += pred_line(line == 7 ? 3 : line);
  fixtures::spit(dir / "p.jsonl", text);
  try {
    kr1::load_predictions(dir / "p.jsonl");
    FAIL() << "expected conflict";
  } catch (const kr1::ConflictError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("7"), std::string::npos) << msg;
  }
}

TEST(Predictions, MissingFieldCitesLine) {
  fixtures::TempDir dir;
  fixtures::spit(dir / "p.jsonl", pred_line(1) + "{\"id\":2,\"rag_correct\":true}\n");
  try {
    kr1::load_predictions(dir / "p.jsonl");
    FAIL() << "expected parse error";
  } catch (const kr1::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
  fixtures::spit(dir / "q.jsonl", "not json\n");
  EXPECT_THROW(kr1::load_predictions(dir / "q.jsonl"), kr1::ParseError);
}
