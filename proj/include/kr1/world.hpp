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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kr1/types.hpp"

namespace kr1 {

struct WorldSpec {
  std::int64_t num_entities = 20;
  std::int64_t num_attributes = 10;
  std::int64_t vocab_size = 0;  // 0 selects required_vocab()
  double belief_error_rate = 0.5;
  double context_error_rate = 0.5;
  double self_conflict_rate = 0.0;
  std::uint64_t seed = 7;

  // Smallest vocabulary that gives every gold and counterfactual value its
  // own token.
  std::int64_t required_vocab() const;
  void validate() const;
};

// Token-id ranges. Values for attribute a occupy
// [value_begin + a * values_per_attribute, ... + values_per_attribute).
struct Vocab {
  std::int64_t size = 0;
  std::int64_t num_entities = 0;
  std::int64_t num_attributes = 0;

  Token entity(std::int64_t e) const { return static_cast<Token>(special::kCount + e); }
  Token attribute(std::int64_t a) const {
    return static_cast<Token>(special::kCount + num_entities + a);
  }
  std::int64_t values_per_attribute() const { return 2 * num_entities; }
  Token value_begin(std::int64_t a) const {
    return static_cast<Token>(special::kCount + num_entities + num_attributes +
                              a * values_per_attribute());
  }
  Token value_end(std::int64_t a) const {
    return static_cast<Token>(value_begin(a) + values_per_attribute());
  }
};

struct Fact {
  std::int64_t entity = 0;
  std::int64_t attribute = 0;
  Token gold = 0;
  Token belief = 0;
  friend bool operator==(const Fact&, const Fact&) = default;
};

// Facts are stored densely in key order: key = entity * num_attributes + attribute.
struct KnowledgeWorld {
  WorldSpec spec;
  Vocab vocab;
  std::vector<Fact> facts;

  std::size_t num_keys() const { return facts.size(); }
  const Fact& fact(std::int64_t entity, std::int64_t attribute) const {
    return facts[static_cast<std::size_t>(entity * vocab.num_attributes + attribute)];
  }
  TokenSeq query(const Fact& f) const { return {vocab.entity(f.entity), vocab.attribute(f.attribute)}; }
  TokenSeq passage(const Fact& f, Token value) const {
    return {vocab.entity(f.entity), vocab.attribute(f.attribute), value};
  }
};

enum class Split { kTrain, kTest };

struct Example {
  std::int64_t id = 0;
  TokenSeq query;
  TokenSeq gold_answer;
  std::vector<TokenSeq> contexts;
  bool context_correct = true;
  bool self_conflict = false;
  TokenSeq belief_answer;
  friend bool operator==(const Example&, const Example&) = default;
};

struct ExampleSet {
  std::vector<Example> examples;
  Split split = Split::kTrain;
};

struct PromptPair {
  TokenSeq p;
  TokenSeq p_ctx;
};

KnowledgeWorld generate_world(const WorldSpec& spec);

// Draws n distinct keys; ids run from first_id. F_e and self-conflict
// memberships are exact-count draws of round(rate * n) examples each.
ExampleSet build_examples(const KnowledgeWorld& world, std::int64_t n, double context_error_rate,
                          double self_conflict_rate, std::uint64_t seed, std::int64_t first_id = 0);

// Splits by position: the first n_train examples become TRAIN, the rest TEST.
std::pair<ExampleSet, ExampleSet> split_examples(ExampleSet all, std::int64_t n_train);

PromptPair make_prompts(const Example& example);

// Teacher targets: the answer sequence terminated by EOS.
TokenSeq with_eos(const TokenSeq& answer);

// Line-delimited JSON serialization. The world file carries one header line
// followed by one line per fact.
void save_world(const KnowledgeWorld& world, const std::filesystem::path& path);
KnowledgeWorld load_world(const std::filesystem::path& path);
void save_examples(const ExampleSet& set, const std::filesystem::path& path);
ExampleSet load_examples(const std::filesystem::path& path);

std::string to_string(Split split);

}  // namespace kr1
