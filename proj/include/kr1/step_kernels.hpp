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
#include <span>
#include <string>
#include <vector>

#include "kr1/advantage.hpp"
#include "kr1/exec.hpp"
#include "kr1/objective.hpp"
#include "kr1/rollout.hpp"
#include "kr1/world.hpp"

namespace kr1 {

// KR1 samples both prompts and adds the exploration term. GRPO_RAG spends the
// whole rollout budget on p_ctx; GRPO_NORAG spends it on p.
enum class Mode { kKr1, kGrpoRag, kGrpoNoRag };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& s);

// Hyperparameters as the given mode actually uses them. For the GRPO modes
// the group size is n1 + n2 (matched rollout budget), n1 = 0 and the
// exploration term is off.
HyperParams resolve_mode(HyperParams hp, Mode mode);

// Prompts as the mode uses them; GRPO_NORAG samples its single group from p.
PromptPair prompts_for(const Example& example, Mode mode);

struct StepContext {
  const PolicyParams& params;
  const PolicyParams& old_params;
  const PolicyParams& ref_params;
  const HyperParams& hp;  // already resolved for `mode`
  Mode mode;
  std::uint64_t seed;
  std::int64_t step;
};

struct ExampleOutcome {
  RolloutBatch rollouts;
  AdvantageSet advantages;
  ObjectiveParts parts;
};

// Rollouts, advantages and objective for one example.
ExampleOutcome process_example(const Example& example, const StepContext& ctx);

// Per-example work in input order. kSerial is the reference; kParallel
// distributes examples over OpenMP threads and is bitwise identical.
std::vector<ExampleOutcome> process_examples(std::span<const Example> examples, const StepContext& ctx,
                                             Exec exec = Exec::kParallel);

// Mean gradient over outcomes, summed in input order.
GradVector mean_gradient(std::span<const ExampleOutcome> outcomes);

}  // namespace kr1
