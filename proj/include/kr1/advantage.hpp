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

#include <span>
#include <vector>

namespace kr1 {

enum class StdForm { kPopulation, kSample };

struct AdvantageConfig {
  double alpha = 2.0;
  double beta_adv = 0.05;
  double std_floor = 1e-8;
  StdForm std_form = StdForm::kPopulation;
};

struct AdvantageSet {
  std::vector<double> a_param;              // A_i, group-normalized over the p group
  std::vector<double> a_ctx;                // A'_j, group-normalized over the p_ctx group
  std::vector<double> a_joint;              // A-hat_i, p group scored against the union
  std::vector<double> a_joint_transformed;  // T(A-hat_i)
};

// z-scores; an all-zero vector when the spread falls below std_floor.
std::vector<double> normalize_group(std::span<const double> rewards, const AdvantageConfig& config = {});

// Scores each of rewards_param against the mean/std of both groups combined.
std::vector<double> normalize_joint(std::span<const double> rewards_param, std::span<const double> rewards_ctx,
                                    const AdvantageConfig& config = {});

// alpha * a for a > 0, beta_adv * a otherwise.
inline double transform(double a, const AdvantageConfig& config = {}) {
  return a > 0.0 ? config.alpha * a : config.beta_adv * a;
}

// Empty param rewards yield empty a_param / a_joint vectors.
AdvantageSet compute_advantages(std::span<const double> rewards_param, std::span<const double> rewards_ctx,
                                const AdvantageConfig& config = {});

}  // namespace kr1
