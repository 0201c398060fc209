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
#include <vector>

#include "kr1/policy.hpp"
#include "kr1/world.hpp"

namespace kr1 {

struct PretrainConfig {
  std::int64_t dim = 16;
  double init_scale = 0.1;
  std::int64_t epochs = 60;
  double lr = 0.5;
  // Adds context-reading pairs so the base model defers to retrieved
  // passages, the behaviour the RL stage has to correct.
  bool reading_pairs = true;
  std::int64_t reading_per_key = 4;
  // Share of reading pairs whose target is the passage value; the rest
  // target the belief. Sets how strongly the base prefers context in a conflict.
  double context_trust = 0.8;
  std::uint64_t seed = 0;
};

// (p, belief ++ EOS) for every key of the world.
std::vector<TrainingPair> belief_pairs(const KnowledgeWorld& world);

// per_key pairs for every key, each with one passage asserting a uniformly
// drawn value of the key's attribute. The target is the asserted value with
// probability context_trust and the belief otherwise.
std::vector<TrainingPair> reading_pairs(const KnowledgeWorld& world, std::int64_t per_key, double context_trust,
                                        std::uint64_t seed);

struct PretrainSummary {
  PolicyParams params;
  double belief_accuracy = 0.0;
  double reading_accuracy = 0.0;  // greedy copy rate on fresh passages
};

PretrainSummary pretrain_world(const KnowledgeWorld& world, const PretrainConfig& config);

// Whether test examples reuse the training fact base (fresh passages and
// labels, new ids) or come from keys held out of training.
enum class TestKeys { kShared, kDisjoint };

struct Dataset {
  ExampleSet train;
  ExampleSet test;
};

// Train ids run 0..n_train-1 and test ids n_train..n_train+n_test-1.
Dataset make_dataset(const KnowledgeWorld& world, std::int64_t n_train, std::int64_t n_test, TestKeys test_keys,
                     std::uint64_t seed);

}  // namespace kr1
