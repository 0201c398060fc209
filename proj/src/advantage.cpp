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

#include "kr1/advantage.hpp"

#include <cmath>

#include "kr1/errors.hpp"

namespace kr1 {
namespace {

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

Moments moments(std::span<const double> a, std::span<const double> b, StdForm form) {
  const double n = static_cast<double>(a.size() + b.size());
  double sum = 0.0;
  for (double x : a) sum += x;
  for (double x : b) sum += x;
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : a) ss += (x - mean) * (x - mean);
  for (double x : b) ss += (x - mean) * (x - mean);
  const double denom = form == StdForm::kSample ? n - 1.0 : n;
  return {mean, denom > 0.0 ? std::sqrt(ss / denom) : 0.0};
}

std::vector<double> zscore(std::span<const double> subject, const Moments& m, double floor) {
  std::vector<double> out(subject.size(), 0.0);
  if (m.std < floor) return out;
  for (std::size_t i = 0; i < subject.size(); ++i) out[i] = (subject[i] - m.mean) / m.std;
  return out;
}

}  // namespace

std::vector<double> normalize_group(std::span<const double> rewards, const AdvantageConfig& config) {
  if (rewards.empty()) throw DomainError("normalize_group needs a non-empty reward vector");
  return zscore(rewards, moments(rewards, {}, config.std_form), config.std_floor);
}

std::vector<double> normalize_joint(std::span<const double> rewards_param, std::span<const double> rewards_ctx,
                                    const AdvantageConfig& config) {
  if (rewards_param.empty() || rewards_ctx.empty()) {
    throw DomainError("normalize_joint needs both groups non-empty");
  }
  return zscore(rewards_param, moments(rewards_param, rewards_ctx, config.std_form), config.std_floor);
}

AdvantageSet compute_advantages(std::span<const double> rewards_param, std::span<const double> rewards_ctx,
                                const AdvantageConfig& config) {
  AdvantageSet set;
  if (!rewards_ctx.empty()) set.a_ctx = normalize_group(rewards_ctx, config);
  if (!rewards_param.empty()) {
    set.a_param = normalize_group(rewards_param, config);
    if (!rewards_ctx.empty()) {
      set.a_joint = normalize_joint(rewards_param, rewards_ctx, config);
      set.a_joint_transformed.reserve(set.a_joint.size());
      for (double a : set.a_joint) set.a_joint_transformed.push_back(transform(a, config));
    }
  }
  return set;
}

}  // namespace kr1
