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

#include "kr1/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "kr1/errors.hpp"

namespace kr1 {
namespace {

constexpr char kStateMagic[8] = {'K', 'R', '1', 'T', 'R', 'A', 'I', 'N'};
constexpr std::uint32_t kStateVersion = 1;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ParseError("truncated training checkpoint");
  return v;
}

void put_vector(std::ostream& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_vector(std::istream& in, std::size_t expected_max) {
  const auto n = get<std::uint64_t>(in);
  if (n > expected_max) throw ParseError("corrupt training checkpoint: vector length " + std::to_string(n));
  std::vector<double> v(n);
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)))) {
    throw ParseError("truncated training checkpoint");
  }
  return v;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

bool finite(std::span<const double> g) {
  return std::all_of(g.begin(), g.end(), [](double x) { return std::isfinite(x); });
}

// Names the first objective term whose gradient is non-finite.
std::string offending_term(const Example& ex, const ExampleOutcome& o, const TrainState& s, const HyperParams& hp,
                           Mode mode) {
  const auto prompts = prompts_for(ex, mode);
  const std::pair<const char*, TermWeights> terms[] = {{"l", {1, 0, 0, 0}},
                                                       {"l_ctx", {0, 1, 0, 0}},
                                                       {"l_hat", {0, 0, 1, 0}},
                                                       {"kl", {0, 0, 0, 1}}};
  for (const auto& [name, w] : terms) {
    const auto part = weighted_objective(s.params, s.ref_params, o.rollouts, prompts, o.advantages, hp, w);
    if (!finite(part.grad)) return name;
  }
  return "combined";
}

}  // namespace

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::kSgd ? "sgd" : "adam"; }

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

TrainState make_train_state(const PolicyParams& initial, std::uint64_t seed, OptimizerKind optimizer) {
  TrainState s;
  s.params = initial;
  s.old_params = initial;
  s.ref_params = initial;
  s.seed = seed;
  s.optimizer.kind = optimizer;
  if (optimizer == OptimizerKind::kAdam) {
    s.optimizer.m.assign(initial.flat().size(), 0.0);
    s.optimizer.v.assign(initial.flat().size(), 0.0);
  }
  return s;
}

std::vector<std::size_t> select_batch(std::size_t dataset_size, std::uint64_t seed, std::int64_t step,
                                      std::int64_t batch_size) {
  std::vector<std::size_t> idx(dataset_size);
  std::iota(idx.begin(), idx.end(), 0);
  const auto k = std::min<std::size_t>(dataset_size, static_cast<std::size_t>(std::max<std::int64_t>(batch_size, 0)));
  Rng rng{seed, 0x6261746368ULL, static_cast<std::uint64_t>(step)};
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + rng.below(dataset_size - i)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

void ascend(TrainState& state, std::span<const double> grad, double lr) {
  auto theta = state.params.flat();
  if (grad.size() != theta.size()) throw ShapeError("gradient length does not match parameters");
  auto& opt = state.optimizer;
  if (opt.kind == OptimizerKind::kSgd) {
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] += lr * grad[k];
    return;
  }
  ++opt.t;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(opt.t));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(opt.t));
  for (std::size_t k = 0; k < theta.size(); ++k) {
    opt.m[k] = kAdamBeta1 * opt.m[k] + (1.0 - kAdamBeta1) * grad[k];
    opt.v[k] = kAdamBeta2 * opt.v[k] + (1.0 - kAdamBeta2) * grad[k] * grad[k];
    theta[k] += lr * (opt.m[k] / c1) / (std::sqrt(opt.v[k] / c2) + kAdamEps);
  }
}

StepStats train_step(TrainState& state, std::span<const Example> batch, const HyperParams& hp, Mode mode, Exec exec) {
  if (batch.empty()) throw DomainError("train_step needs a non-empty batch");
  const StepContext ctx{state.params, state.old_params, state.ref_params, hp, mode, state.seed, state.step};
  const auto outcomes = process_examples(batch, ctx, exec);

  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!finite(outcomes[i].parts.grad)) {
      throw NumericError("non-finite gradient at step " + std::to_string(state.step) + ", example " +
                         std::to_string(batch[i].id) + ", term " +
                         offending_term(batch[i], outcomes[i], state, hp, mode));
    }
  }
  const auto grad = mean_gradient(outcomes);

  StepStats st;
  std::size_t n_all = 0, n_param = 0, n_ctx = 0;
  double r_param = 0.0, r_ctx = 0.0;
  const double inv = 1.0 / static_cast<double>(outcomes.size());
  for (const auto& o : outcomes) {
    for (const auto& r : o.rollouts.group_param) r_param += r.reward;
    for (const auto& r : o.rollouts.group_ctx) r_ctx += r.reward;
    n_param += o.rollouts.group_param.size();
    n_ctx += o.rollouts.group_ctx.size();
    st.j += inv * o.parts.j;
    st.l += inv * o.parts.l;
    st.l_ctx += inv * o.parts.l_ctx;
    st.l_hat += inv * o.parts.l_hat;
    st.kl += inv * o.parts.kl;
  }
  n_all = n_param + n_ctx;
  st.reward_param = n_param ? r_param / static_cast<double>(n_param) : 0.0;
  st.reward_ctx = n_ctx ? r_ctx / static_cast<double>(n_ctx) : 0.0;
  st.reward_mean = n_all ? (r_param + r_ctx) / static_cast<double>(n_all) : 0.0;

  ascend(state, grad, hp.lr);
  state.old_params = state.params;
  ++state.step;
  st.step = state.step;
  return st;
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kStateMagic, sizeof kStateMagic);
  put(out, kStateVersion);
  put<std::int64_t>(out, state.step);
  put<std::uint64_t>(out, state.seed);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(state.optimizer.kind));
  put<std::int64_t>(out, state.optimizer.t);
  write_params(out, state.params);
  write_params(out, state.old_params);
  write_params(out, state.ref_params);
  put_vector(out, state.optimizer.m);
  put_vector(out, state.optimizer.v);
}

TrainState restore_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kStateMagic, sizeof magic) != 0) {
    throw ParseError(path.string() + ": not a training checkpoint");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kStateVersion) {
    throw VersionError(path.string() + ": training checkpoint version " + std::to_string(version) + ", expected " +
                       std::to_string(kStateVersion));
  }
  TrainState s;
  s.step = get<std::int64_t>(in);
  s.seed = get<std::uint64_t>(in);
  const auto kind = get<std::uint8_t>(in);
  if (kind > 1) throw ParseError(path.string() + ": unknown optimizer tag");
  s.optimizer.kind = static_cast<OptimizerKind>(kind);
  s.optimizer.t = get<std::int64_t>(in);
  s.params = read_params(in);
  s.old_params = read_params(in);
  s.ref_params = read_params(in);
  const auto n = s.params.flat().size();
  s.optimizer.m = get_vector(in, n);
  s.optimizer.v = get_vector(in, n);
  if (s.step < 0 || s.old_params.flat().size() != n || s.ref_params.flat().size() != n) {
    throw ParseError(path.string() + ": inconsistent training checkpoint");
  }
  return s;
}

void RunConfig::validate() const {
  if (steps_max < 1) throw ConfigError("steps_max must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (eval_every < 0 || checkpoint_every < 0) throw ConfigError("eval_every and checkpoint_every must be >= 0");
  hp.validate();
}

std::string curves_csv_header() {
  std::string h = "step,reward_mean,reward_param,reward_ctx,j,l,l_ctx,l_hat,kl";
  for (const auto& c : metric_columns()) h += ',' + c;
  return h;
}

std::string curves_csv_row(const CurveRow& row) {
  const auto& s = row.stats;
  std::string out = std::to_string(s.step);
  for (double x : {s.reward_mean, s.reward_param, s.reward_ctx, s.j, s.l, s.l_ctx, s.l_hat, s.kl}) out += ',' + fmt(x);
  const auto n = metric_columns().size();
  if (row.eval) {
    for (const auto& m : metric_values(*row.eval)) out += ',' + format_metric(m);
  } else {
    out += std::string(n, ',');
  }
  return out;
}

std::string run_log_line(const StepStats& s) {
  // Values are rendered via %.17g so that logs round-trip bit-exactly.
  std::string out = "{\"step\":" + std::to_string(s.step);
  const std::pair<const char*, double> fields[] = {{"reward_mean", s.reward_mean}, {"reward_param", s.reward_param},
                                                   {"reward_ctx", s.reward_ctx},   {"j", s.j},
                                                   {"l", s.l},                     {"l_ctx", s.l_ctx},
                                                   {"l_hat", s.l_hat},             {"kl", s.kl}};
  for (const auto& [k, v] : fields) out += std::string(",\"") + k + "\":" + fmt(v);
  return out + "}";
}

RunArtifacts run_training(const RunConfig& config, TrainState state, const ExampleSet& train, const ExampleSet& test,
                          const std::filesystem::path& out_dir) {
  config.validate();
  if (train.examples.empty()) throw ConfigError("training set is empty");
  if (state.step >= config.steps_max) throw ConfigError("checkpoint is already at or past steps_max");
  const HyperParams hp = resolve_mode(config.hp, config.mode);
  const bool write = !out_dir.empty();

  std::ofstream log, curves;
  std::filesystem::path ckpt_dir;
  if (write) {
    std::filesystem::create_directories(out_dir);
    ckpt_dir = out_dir / "checkpoints";
    std::filesystem::create_directories(ckpt_dir);
    const auto mode = state.step == 0 ? std::ios::trunc : std::ios::app;
    log.open(out_dir / "run_log.jsonl", std::ios::out | mode);
    const bool fresh_curves = state.step == 0 || !std::filesystem::exists(out_dir / "curves.csv");
    curves.open(out_dir / "curves.csv", std::ios::out | (fresh_curves ? std::ios::trunc : std::ios::app));
    if (!log || !curves) throw IoError("cannot write run files under " + out_dir.string());
    if (fresh_curves) curves << curves_csv_header() << '\n';
  }

  // T_i labels come from the frozen reference policy and never change.
  const auto labels = label_parametric(state.ref_params, test.examples, config.exec);
  auto evaluate = [&](const PolicyParams& params) {
    const auto rag = rag_correctness(params, test.examples, config.exec);
    std::vector<PredictionRecord> recs;
    recs.reserve(test.examples.size());
    for (std::size_t i = 0; i < test.examples.size(); ++i) {
      const auto& ex = test.examples[i];
      recs.push_back({ex.id, labels[i], rag[i], ex.context_correct, ex.self_conflict});
    }
    return evaluate_records(recs);
  };

  RunArtifacts art;
  std::vector<Example> batch;
  while (state.step < config.steps_max) {
    batch.clear();
    for (auto i : select_batch(train.examples.size(), state.seed, state.step, config.batch_size)) {
      batch.push_back(train.examples[i]);
    }
    if (write && config.trace_rollouts) {
      for (const auto& ex : batch) {
        append_rollout_trace(out_dir / "rollouts.jsonl", state.step,
                             collect_groups(state.old_params, ex, prompts_for(ex, config.mode), hp.rollout,
                                            state.seed, state.step));
      }
    }
    CurveRow row;
    row.stats = train_step(state, batch, hp, config.mode, config.exec);
    const bool last = state.step == config.steps_max;
    if (!test.examples.empty() && (last || (config.eval_every > 0 && state.step % config.eval_every == 0))) {
      row.eval = evaluate(state.params);
    }
    if (write) {
      log << run_log_line(row.stats) << '\n';
      curves << curves_csv_row(row) << '\n';
      if ((config.checkpoint_every > 0 && state.step % config.checkpoint_every == 0) || last) {
        char name[32];
        std::snprintf(name, sizeof name, "step_%06lld.ckpt", static_cast<long long>(state.step));
        save_checkpoint(state, ckpt_dir / name);
        art.checkpoints.push_back(ckpt_dir / name);
      }
    }
    art.curves.push_back(std::move(row));
  }
  art.final_report = art.curves.back().eval ? *art.curves.back().eval : evaluate(state.params);
  if (write) {
    std::ofstream rep(out_dir / "final_report.json");
    rep << report_json(art.final_report) << '\n';
    std::ofstream sum(out_dir / "final_report.csv");
    sum << "mode,seed,steps," << csv_header() << '\n'
        << to_string(config.mode) << ',' << config.seed << ',' << state.step << ',' << csv_row(art.final_report)
        << '\n';
  }
  art.final_state = std::move(state);
  return art;
}

}  // namespace kr1
