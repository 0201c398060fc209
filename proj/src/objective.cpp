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

#include "kr1/objective.hpp"

#include <algorithm>
#include <cmath>

#include "kr1/errors.hpp"

namespace kr1 {

void HyperParams::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("clip_eps must lie in (0,1)");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(beta_kl >= 0.0)) throw ConfigError("beta_kl must be non-negative");
  if (!(advantage.alpha > 0.0) || !(advantage.beta_adv > 0.0)) throw ConfigError("alpha and beta_adv must be positive");
  if (rollout.n1 < 0 || rollout.n2 < 1) throw ConfigError("need n1 >= 0 and n2 >= 1");
  if (!(rollout.temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (rollout.max_len < 1) throw ConfigError("max_len must be at least 1");
}

std::string to_string(ExplorationForm form) {
  return form == ExplorationForm::kRawProb ? "raw_prob" : "log_prob";
}

SurrogateValue surrogate_clipped(std::span<const double> new_log_probs, std::span<const double> old_log_probs,
                                 double advantage, double clip_eps) {
  if (new_log_probs.size() != old_log_probs.size()) {
    throw ShapeError("surrogate_clipped: " + std::to_string(new_log_probs.size()) + " new vs " +
                     std::to_string(old_log_probs.size()) + " old log-probs");
  }
  SurrogateValue out;
  out.d_new_log_probs.resize(new_log_probs.size(), 0.0);
  for (std::size_t t = 0; t < new_log_probs.size(); ++t) {
    const double r = std::exp(new_log_probs[t] - old_log_probs[t]);
    const double unclipped = r * advantage;
    const double clipped = std::clamp(r, 1.0 - clip_eps, 1.0 + clip_eps) * advantage;
    if (unclipped <= clipped) {
      out.value += unclipped;
      out.d_new_log_probs[t] = unclipped;  // d(r A)/d log pi = r A
    } else {
      out.value += clipped;
    }
  }
  return out;
}

namespace {

// Exploration coefficient per token: the value contribution and the weight
// on d log pi.
void exploration_weights(std::span<const double> log_probs, double t_adv, ExplorationForm form, double scale,
                         double& value, std::span<double> weights) {
  for (std::size_t t = 0; t < log_probs.size(); ++t) {
    if (form == ExplorationForm::kRawProb) {
      const double pi = std::exp(log_probs[t]);
      value += pi * t_adv;
      weights[t] += scale * pi * t_adv;
    } else {
      value += log_probs[t] * t_adv;
      weights[t] += scale * t_adv;
    }
  }
}

}  // namespace

ParamValue surrogate_exploration(const PolicyParams& params, TokenSpan p_ctx, TokenSpan tokens, double t_adv,
                                 ExplorationForm form) {
  ParamValue out;
  out.grad.assign(params.flat().size(), 0.0);
  if (t_adv == 0.0) return out;
  const auto lp = log_prob(params, p_ctx, tokens);
  std::vector<double> w(tokens.size(), 0.0);
  exploration_weights(lp.per_token, t_adv, form, 1.0, out.value, w);
  accumulate_log_prob_grad(params, p_ctx, tokens, w, out.grad);
  return out;
}

ParamValue kl_penalty(const PolicyParams& params, const PolicyParams& ref_params,
                      std::span<const PromptedRollout> rollouts) {
  ParamValue out;
  out.grad.assign(params.flat().size(), 0.0);
  std::size_t count = 0;
  for (const auto& r : rollouts) count += r.tokens.size();
  if (count == 0) return out;
  const double inv = 1.0 / static_cast<double>(count);
  for (const auto& r : rollouts) {
    const auto cur = log_prob(params, r.prompt, r.tokens);
    const auto ref = log_prob(ref_params, r.prompt, r.tokens);
    std::vector<double> w(r.tokens.size());
    for (std::size_t t = 0; t < w.size(); ++t) {
      out.value += inv * kl_token(ref.per_token[t], cur.per_token[t]);
      w[t] = inv * (1.0 - std::exp(ref.per_token[t] - cur.per_token[t]));
    }
    accumulate_log_prob_grad(params, r.prompt, r.tokens, w, out.grad);
  }
  return out;
}

ObjectiveParts total_objective(const PolicyParams& params, const PolicyParams& ref_params,
                               const RolloutBatch& batch, const PromptPair& prompts,
                               const AdvantageSet& advantages, const HyperParams& hp) {
  return weighted_objective(params, ref_params, batch, prompts, advantages, hp, {1.0, 1.0, 1.0, -hp.beta_kl});
}

ObjectiveParts weighted_objective(const PolicyParams& params, const PolicyParams& ref_params,
                                  const RolloutBatch& batch, const PromptPair& prompts,
                                  const AdvantageSet& advantages, const HyperParams& hp, const TermWeights& weights) {
  const auto& gp = batch.group_param;
  const auto& gc = batch.group_ctx;
  const bool explore = hp.exploration_enabled && !gp.empty();
  if (advantages.a_param.size() != gp.size() || advantages.a_ctx.size() != gc.size() ||
      (explore && advantages.a_joint_transformed.size() != gp.size())) {
    throw ShapeError("advantage vectors do not match rollout group sizes");
  }

  ObjectiveParts out;
  out.grad.assign(params.flat().size(), 0.0);

  std::size_t kl_tokens = 0;
  for (const auto& r : gp) kl_tokens += r.tokens.size();
  for (const auto& r : gc) kl_tokens += r.tokens.size();
  const double kl_scale = kl_tokens > 0 ? 1.0 / static_cast<double>(kl_tokens) : 0.0;

  // One pass per (prompt, rollout): clipped surrogate and KL share a prompt.
  auto sampled_pass = [&](const Rollout& r, TokenSpan prompt, double adv, double group_scale, double term_weight,
                          double& term_value) {
    if (r.old_log_probs.size() != r.tokens.size()) throw ShapeError("rollout log-prob count mismatch");
    const auto cur = log_prob(params, prompt, r.tokens);
    const auto ref = log_prob(ref_params, prompt, r.tokens);
    const auto sur = surrogate_clipped(cur.per_token, r.old_log_probs, adv, hp.clip_eps);
    term_value += group_scale * sur.value;
    std::vector<double> w(r.tokens.size());
    for (std::size_t t = 0; t < w.size(); ++t) {
      const double k = kl_token(ref.per_token[t], cur.per_token[t]);
      out.kl += kl_scale * k;
      w[t] = term_weight * group_scale * sur.d_new_log_probs[t] +
             weights.kl * kl_scale * (1.0 - std::exp(ref.per_token[t] - cur.per_token[t]));
    }
    accumulate_log_prob_grad(params, prompt, r.tokens, w, out.grad);
  };

  const double s1 = gp.empty() ? 0.0 : 1.0 / static_cast<double>(gp.size());
  const double s2 = 1.0 / static_cast<double>(gc.size());
  for (std::size_t i = 0; i < gp.size(); ++i) sampled_pass(gp[i], prompts.p, advantages.a_param[i], s1, weights.l, out.l);
  for (std::size_t j = 0; j < gc.size(); ++j) sampled_pass(gc[j], prompts.p_ctx, advantages.a_ctx[j], s2, weights.l_ctx, out.l_ctx);

  if (explore) {
    for (std::size_t i = 0; i < gp.size(); ++i) {
      const double t_adv = advantages.a_joint_transformed[i];
      if (t_adv == 0.0) continue;
      const auto& r = gp[i];
      const auto lp = log_prob(params, prompts.p_ctx, r.tokens);
      std::vector<double> w(r.tokens.size(), 0.0);
      double value = 0.0;
      exploration_weights(lp.per_token, t_adv, hp.exploration_form, weights.l_hat * s1, value, w);
      out.l_hat += s1 * value;
      accumulate_log_prob_grad(params, prompts.p_ctx, r.tokens, w, out.grad);
    }
  }

  out.j = out.l + out.l_ctx + out.l_hat - hp.beta_kl * out.kl;
  return out;
}

}  // namespace kr1
