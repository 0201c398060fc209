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

#include "kr1/pipeline.hpp"

#include "kr1/rng.hpp"

namespace kr1 {

std::vector<TrainingPair> belief_pairs(const KnowledgeWorld& world) {
  std::vector<TrainingPair> pairs;
  pairs.reserve(world.num_keys());
  for (const auto& f : world.facts) {
    Example ex;
    ex.query = world.query(f);
    pairs.push_back({make_prompts(ex).p, with_eos({f.belief})});
  }
  return pairs;
}

std::vector<TrainingPair> reading_pairs(const KnowledgeWorld& world, std::int64_t per_key, double context_trust,
                                        std::uint64_t seed) {
  std::vector<TrainingPair> pairs;
  pairs.reserve(world.num_keys() * static_cast<std::size_t>(per_key));
  Rng rng{seed, 0x72656164ULL};
  for (std::int64_t rep = 0; rep < per_key; ++rep)
  for (const auto& f : world.facts) {
    const Token v = static_cast<Token>(world.vocab.value_begin(f.attribute) +
                                       static_cast<Token>(rng.below(static_cast<std::uint64_t>(
                                           world.vocab.values_per_attribute()))));
    Example ex;
    ex.query = world.query(f);
    ex.contexts = {world.passage(f, v)};
    const Token target = rng.uniform() < context_trust ? v : f.belief;
    pairs.push_back({make_prompts(ex).p_ctx, with_eos({target})});
  }
  return pairs;
}

PretrainSummary pretrain_world(const KnowledgeWorld& world, const PretrainConfig& config) {
  const auto beliefs = belief_pairs(world);
  auto params = PolicyParams::random(world.vocab.size, config.dim, config.init_scale, config.seed);
  std::vector<TrainingPair> pairs;
  // Reading passages are redrawn every epoch so that the base model learns to
  // copy from context rather than memorize (key, passage) combinations.
  for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    pairs = beliefs;
    if (config.reading_pairs) {
      auto reading = reading_pairs(world, config.reading_per_key, config.context_trust, stream_key({config.seed, static_cast<std::uint64_t>(epoch)}));
      pairs.insert(pairs.end(), reading.begin(), reading.end());
    }
    params = pretrain(std::move(params), pairs, 1, config.lr, stream_key({config.seed, static_cast<std::uint64_t>(epoch), 1})).params;
  }
  PretrainSummary s;
  s.params = std::move(params);
  s.belief_accuracy = greedy_accuracy(s.params, beliefs);
  if (config.reading_pairs) {
    s.reading_accuracy = greedy_accuracy(s.params, reading_pairs(world, config.reading_per_key, 1.0, ~config.seed));
  }
  return s;
}

Dataset make_dataset(const KnowledgeWorld& world, std::int64_t n_train, std::int64_t n_test, TestKeys test_keys,
                     std::uint64_t seed) {
  const double ctx = world.spec.context_error_rate;
  const double sc = world.spec.self_conflict_rate;
  Dataset d;
  if (test_keys == TestKeys::kDisjoint) {
    auto [train, test] = split_examples(build_examples(world, n_train + n_test, ctx, sc, stream_key({seed, 1})), n_train);
    d.train = std::move(train);
    d.test = std::move(test);
  } else {
    d.train = build_examples(world, n_train, ctx, sc, stream_key({seed, 1}));
    d.test = build_examples(world, n_test, ctx, sc, stream_key({seed, 2}), n_train);
  }
  d.train.split = Split::kTrain;
  d.test.split = Split::kTest;
  return d;
}

}  // namespace kr1
