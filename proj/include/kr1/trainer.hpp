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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kr1/evalsuite.hpp"
#include "kr1/objective.hpp"
#include "kr1/policy.hpp"
#include "kr1/step_kernels.hpp"
#include "kr1/world.hpp"

namespace kr1 {

enum class OptimizerKind : std::uint8_t { kSgd = 0, kAdam = 1 };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& s);

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kSgd;
  std::int64_t t = 0;
  std::vector<double> m;  // Adam first moment
  std::vector<double> v;  // Adam second moment
  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

struct TrainState {
  PolicyParams params;
  PolicyParams old_params;
  PolicyParams ref_params;
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  OptimizerState optimizer;
  friend bool operator==(const TrainState&, const TrainState&) = default;
};

// params, old and reference all start at `initial`.
TrainState make_train_state(const PolicyParams& initial, std::uint64_t seed,
                            OptimizerKind optimizer = OptimizerKind::kSgd);

// Example positions for a step, drawn without replacement from the
// (seed, step) stream and returned in ascending order. Independent of mode.
std::vector<std::size_t> select_batch(std::size_t dataset_size, std::uint64_t seed, std::int64_t step,
                                      std::int64_t batch_size);

struct StepStats {
  std::int64_t step = 0;
  double reward_mean = 0.0;   // over every sampled rollout
  double reward_param = 0.0;  // p group; 0 when the mode samples none
  double reward_ctx = 0.0;    // p_ctx group (p for GRPO_NORAG)
  double j = 0.0, l = 0.0, l_ctx = 0.0, l_hat = 0.0, kl = 0.0;
};

// One iteration of the optimization loop: sample under old_params, score,
// ascend on the batch-mean gradient, then old_params <- params.
// `hp` must already be resolved for `mode`.
StepStats train_step(TrainState& state, std::span<const Example> batch, const HyperParams& hp, Mode mode,
                     Exec exec = Exec::kParallel);

// Applies one ascent update with the state's optimizer.
void ascend(TrainState& state, std::span<const double> grad, double lr);

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState restore_checkpoint(const std::filesystem::path& path);

struct RunConfig {
  HyperParams hp;  // unresolved; the mode is applied by the run
  Mode mode = Mode::kKr1;
  std::int64_t steps_max = 300;
  std::int64_t batch_size = 8;
  std::int64_t eval_every = 50;        // 0 disables periodic evaluation
  std::int64_t checkpoint_every = 0;   // 0 disables periodic checkpoints
  std::uint64_t seed = 1;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  bool trace_rollouts = false;
  Exec exec = Exec::kParallel;

  void validate() const;
};

struct CurveRow {
  StepStats stats;
  std::optional<MetricReport> eval;
};

struct RunArtifacts {
  std::vector<CurveRow> curves;
  std::vector<std::filesystem::path> checkpoints;
  MetricReport final_report;
  TrainState final_state;
};

// Runs from `state.step` up to config.steps_max. With a non-empty out_dir,
// writes run_log.jsonl, curves.csv, checkpoints/ and final_report.json there.
RunArtifacts run_training(const RunConfig& config, TrainState state, const ExampleSet& train, const ExampleSet& test,
                          const std::filesystem::path& out_dir = {});

std::string curves_csv_header();
std::string curves_csv_row(const CurveRow& row);
std::string run_log_line(const StepStats& stats);

}  // namespace kr1
