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
#include <vector>

#include "kr1/policy.hpp"
#include "kr1/world.hpp"

namespace kr1 {

enum class Origin : std::uint8_t { kParam = 0, kCtx = 1 };

struct Rollout {
  Origin origin = Origin::kParam;
  TokenSeq tokens;
  std::vector<double> old_log_probs;
  double reward = 0.0;
};

struct RolloutBatch {
  std::int64_t example_id = 0;
  std::vector<Rollout> group_param;  // sampled after p
  std::vector<Rollout> group_ctx;    // sampled after p_ctx
};

struct RolloutConfig {
  std::int64_t n1 = 8;
  std::int64_t n2 = 8;
  double temperature = 0.9;
  std::int64_t max_len = 3;
};

// 1 iff the tokens before the first EOS equal `gold` exactly; sequences with
// no EOS (truncated) score 0.
double reward(TokenSpan tokens, TokenSpan gold);

// Each rollout draws from its own stream keyed by
// (seed, step, example id, origin, index within group).
RolloutBatch collect_groups(const PolicyParams& old_params, const Example& example, const PromptPair& prompts,
                            const RolloutConfig& config, std::uint64_t seed, std::int64_t step);

std::string to_string(Origin origin);

// Appends one line per rollout: {step, example_id, origin, tokens, reward}.
void append_rollout_trace(const std::filesystem::path& path, std::int64_t step, const RolloutBatch& batch);

}  // namespace kr1
