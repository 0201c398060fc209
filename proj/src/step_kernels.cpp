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

#include "kr1/step_kernels.hpp"

#include "kr1/errors.hpp"

namespace kr1 {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kKr1:
      return "kr1";
    case Mode::kGrpoRag:
      return "grpo_rag";
    case Mode::kGrpoNoRag:
      return "grpo_norag";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& s) {
  if (s == "kr1") return Mode::kKr1;
  if (s == "grpo_rag") return Mode::kGrpoRag;
  if (s == "grpo_norag") return Mode::kGrpoNoRag;
  throw ConfigError("unknown mode '" + s + "' (expected kr1, grpo_rag or grpo_norag)");
}

HyperParams resolve_mode(HyperParams hp, Mode mode) {
  if (mode != Mode::kKr1) {
    hp.rollout.n2 += hp.rollout.n1;
    hp.rollout.n1 = 0;
    hp.exploration_enabled = false;
  }
  return hp;
}

PromptPair prompts_for(const Example& example, Mode mode) {
  auto pp = make_prompts(example);
  if (mode == Mode::kGrpoNoRag) pp.p_ctx = pp.p;
  return pp;
}

namespace {

std::vector<double> rewards_of(const std::vector<Rollout>& group) {
  std::vector<double> r;
  r.reserve(group.size());
  for (const auto& x : group) r.push_back(x.reward);
  return r;
}

}  // namespace

ExampleOutcome process_example(const Example& example, const StepContext& ctx) {
  const auto prompts = prompts_for(example, ctx.mode);
  ExampleOutcome out;
  out.rollouts = collect_groups(ctx.old_params, example, prompts, ctx.hp.rollout, ctx.seed, ctx.step);
  out.advantages = compute_advantages(rewards_of(out.rollouts.group_param), rewards_of(out.rollouts.group_ctx),
                                      ctx.hp.advantage);
  out.parts = total_objective(ctx.params, ctx.ref_params, out.rollouts, prompts, out.advantages, ctx.hp);
  return out;
}

std::vector<ExampleOutcome> process_examples(std::span<const Example> examples, const StepContext& ctx, Exec exec) {
  std::vector<ExampleOutcome> out(examples.size());
  const auto n = static_cast<std::int64_t>(examples.size());
  if (exec == Exec::kSerial) {
    for (std::int64_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] = process_example(examples[static_cast<std::size_t>(i)], ctx);
    }
    return out;
  }
  // Exceptions must not escape an OpenMP region; the first one is rethrown.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = process_example(examples[static_cast<std::size_t>(i)], ctx);
    } catch (...) {
#pragma omp critical(kr1_step_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

GradVector mean_gradient(std::span<const ExampleOutcome> outcomes) {
  if (outcomes.empty()) return {};
  GradVector g(outcomes.front().parts.grad.size(), 0.0);
  for (const auto& o : outcomes) {
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += o.parts.grad[k];
  }
  const double inv = 1.0 / static_cast<double>(outcomes.size());
  for (double& x : g) x *= inv;
  return g;
}

}  // namespace kr1
