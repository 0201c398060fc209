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

// Drives the library trainer in GRPO_RAG mode next to a from-scratch GRPO
// loop and reports the largest per-step disagreement.
#pragma once

#include <algorithm>
#include <cmath>

#include "kr1/trainer.hpp"
#include "oracles.hpp"

namespace fixtures {

struct TrajectoryGap {
  double objective = 0.0;   // max |j_lib - j_ref| over steps
  double parameters = 0.0;  // max |theta_lib - theta_ref| over steps and coordinates
  std::int64_t steps = 0;
};

inline TrajectoryGap grpo_trajectory_gap(const kr1::PolicyParams& init, const kr1::ExampleSet& train,
                                         const kr1::HyperParams& hp, std::int64_t steps, std::int64_t batch_size,
                                         std::uint64_t seed) {
  TrajectoryGap gap;
  auto state = kr1::make_train_state(init, seed, kr1::OptimizerKind::kSgd);
  const auto resolved = kr1::resolve_mode(hp, kr1::Mode::kGrpoRag);

  const int V = static_cast<int>(init.vocab_size()), d = static_cast<int>(init.dim());
  std::vector<double> theta(init.flat().begin(), init.flat().end());
  const std::vector<double> theta_ref = theta;
  kr1::RolloutConfig rc = hp.rollout;
  rc.n2 = hp.rollout.n1 + hp.rollout.n2;
  rc.n1 = 0;

  for (std::int64_t s = 0; s < steps; ++s) {
    const auto idx = kr1::select_batch(train.examples.size(), seed, s, batch_size);
    std::vector<kr1::Example> batch;
    for (auto i : idx) batch.push_back(train.examples[i]);

    // reference step
    kr1::PolicyParams snapshot(V, d);
    std::copy(theta.begin(), theta.end(), snapshot.flat().begin());
    const oracle::Net cur{V, d, theta.data()}, ref{V, d, theta_ref.data()};
    std::vector<double> grad(theta.size(), 0.0);
    double j = 0.0;
    for (const auto& ex : batch) {
      const auto prompts = kr1::make_prompts(ex);
      const auto rollouts = kr1::collect_groups(snapshot, ex, prompts, rc, seed, s);
      const auto g = oracle::grpo_objective(cur, ref, prompts.p_ctx, rollouts.group_ctx, hp.clip_eps, hp.beta_kl);
      j += g.j / batch.size();
      for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g.grad[k] / batch.size();
    }
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] += hp.lr * grad[k];

    // library step
    const auto st = kr1::train_step(state, batch, resolved, kr1::Mode::kGrpoRag);
    gap.objective = std::max(gap.objective, std::abs(st.j - j));
    const auto lib = state.params.flat();
    for (std::size_t k = 0; k < theta.size(); ++k) gap.parameters = std::max(gap.parameters, std::abs(lib[k] - theta[k]));
    ++gap.steps;
  }
  return gap;
}

}  // namespace fixtures
