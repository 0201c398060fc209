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

#include "kr1/rollout.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "kr1/errors.hpp"

namespace kr1 {

double reward(TokenSpan tokens, TokenSpan gold) {
  const auto eos = std::find(tokens.begin(), tokens.end(), special::kEos);
  if (eos == tokens.end()) return 0.0;
  return std::equal(tokens.begin(), eos, gold.begin(), gold.end()) ? 1.0 : 0.0;
}

namespace {

Rollout draw(const PolicyParams& params, TokenSpan prompt, const Example& example, Origin origin,
             std::int64_t index, const RolloutConfig& config, std::uint64_t seed, std::int64_t step) {
  Rng rng{seed, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(example.id),
          static_cast<std::uint64_t>(origin), static_cast<std::uint64_t>(index)};
  Rollout r;
  r.origin = origin;
  r.tokens = sample(params, prompt, {config.temperature, false, config.max_len}, rng);
  r.old_log_probs = log_prob(params, prompt, r.tokens).per_token;
  r.reward = reward(r.tokens, example.gold_answer);
  return r;
}

}  // namespace

RolloutBatch collect_groups(const PolicyParams& old_params, const Example& example, const PromptPair& prompts,
                            const RolloutConfig& config, std::uint64_t seed, std::int64_t step) {
  if (config.n1 < 0 || config.n2 < 1) throw DomainError("rollout groups need n1 >= 0 and n2 >= 1");
  RolloutBatch batch;
  batch.example_id = example.id;
  batch.group_param.reserve(static_cast<std::size_t>(config.n1));
  batch.group_ctx.reserve(static_cast<std::size_t>(config.n2));
  for (std::int64_t i = 0; i < config.n1; ++i) {
    batch.group_param.push_back(draw(old_params, prompts.p, example, Origin::kParam, i, config, seed, step));
  }
  for (std::int64_t j = 0; j < config.n2; ++j) {
    batch.group_ctx.push_back(draw(old_params, prompts.p_ctx, example, Origin::kCtx, j, config, seed, step));
  }
  return batch;
}

std::string to_string(Origin origin) { return origin == Origin::kParam ? "param" : "ctx"; }

void append_rollout_trace(const std::filesystem::path& path, std::int64_t step, const RolloutBatch& batch) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  for (const auto* group : {&batch.group_param, &batch.group_ctx}) {
    for (const auto& r : *group) {
      out << nlohmann::json{{"step", step},
                            {"example_id", batch.example_id},
                            {"origin", to_string(r.origin)},
                            {"tokens", r.tokens},
                            {"reward", r.reward}}
                 .dump()
          << '\n';
    }
  }
}

}  // namespace kr1
