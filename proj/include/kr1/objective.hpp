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

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "kr1/advantage.hpp"
#include "kr1/policy.hpp"
#include "kr1/rollout.hpp"

namespace kr1 {

enum class ExplorationForm { kRawProb, kLogProb };

struct HyperParams {
  double clip_eps = 0.2;
  double beta_kl = 0.01;
  AdvantageConfig advantage;
  RolloutConfig rollout;
  double lr = 1e-6;
  ExplorationForm exploration_form = ExplorationForm::kRawProb;
  bool exploration_enabled = true;

  void validate() const;
};

// Toy-scale learning rate; the paper-scale default above stalls a model this small.
inline constexpr double kToyLearningRate = 1e-2;

struct ObjectiveParts {
  double l = 0.0;
  double l_ctx = 0.0;
  double l_hat = 0.0;
  double kl = 0.0;
  double j = 0.0;
  GradVector grad;
};

// Per-rollout clipped surrogate: sum over tokens of
// min(r * A, clip(r, 1 - eps, 1 + eps) * A) with r = exp(new - old).
struct SurrogateValue {
  double value = 0.0;
  std::vector<double> d_new_log_probs;
};
SurrogateValue surrogate_clipped(std::span<const double> new_log_probs, std::span<const double> old_log_probs,
                                 double advantage, double clip_eps);

// Per-rollout exploration term: sum over tokens of pi(o_t | p_ctx, o_<t) * t_adv
// (or log pi under kLogProb). No ratio and no clipping.
struct ParamValue {
  double value = 0.0;
  GradVector grad;
};
ParamValue surrogate_exploration(const PolicyParams& params, TokenSpan p_ctx, TokenSpan tokens, double t_adv,
                                 ExplorationForm form = ExplorationForm::kRawProb);

// k = exp(ref - new) - (ref - new) - 1 >= 0.
inline double kl_token(double ref_log_prob, double new_log_prob);

struct PromptedRollout {
  TokenSpan prompt;
  TokenSpan tokens;
};

// Mean of the per-token estimator over every token of every rollout.
ParamValue kl_penalty(const PolicyParams& params, const PolicyParams& ref_params,
                      std::span<const PromptedRollout> rollouts);

// Coefficients applied to each term's gradient. The combined objective uses
// {1, 1, 1, -beta_kl}; isolating one term is how tests check each gradient.
struct TermWeights {
  double l = 1.0;
  double l_ctx = 1.0;
  double l_hat = 1.0;
  double kl = 0.0;
};

// l from the p group under p, l' from the p_ctx group under p_ctx, l-hat from
// p-group rollouts teacher-forced under p_ctx with T(A-hat), and the KL over
// both sampled groups under their generating prompts. Old log-probs come from
// the batch.
ObjectiveParts total_objective(const PolicyParams& params, const PolicyParams& ref_params,
                               const RolloutBatch& batch, const PromptPair& prompts,
                               const AdvantageSet& advantages, const HyperParams& hp);

// Same terms, gradient weighted by `weights` instead of the combined objective.
ObjectiveParts weighted_objective(const PolicyParams& params, const PolicyParams& ref_params,
                                  const RolloutBatch& batch, const PromptPair& prompts,
                                  const AdvantageSet& advantages, const HyperParams& hp, const TermWeights& weights);

inline double kl_token(double ref_log_prob, double new_log_prob) {
  const double x = ref_log_prob - new_log_prob;
  return std::exp(x) - x - 1.0;
}

std::string to_string(ExplorationForm form);

}  // namespace kr1
