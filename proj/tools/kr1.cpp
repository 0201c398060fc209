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

// kr1: command-line driver for world generation, pretraining, RL training,
// evaluation and knowledge-conflict reporting.

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kr1/config.hpp"
#include "kr1/errors.hpp"
#include "kr1/evalsuite.hpp"
#include "kr1/pipeline.hpp"
#include "kr1/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::optional<std::string> config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option_function<std::string>(
      "--config", [&common](const std::string& p) { common.config_path = p; }, "JSON config file");
  cmd->add_option_function<std::vector<std::string>>(
         "--set",
         [&common](const std::vector<std::string>& kvs) {
           for (const auto& kv : kvs) {
             const auto eq = kv.find('=');
             if (eq == std::string::npos) throw kr1::ConfigError("--set expects key=value, got '" + kv + "'");
             common.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
           }
         },
         "Override any config key (key=value)")
      ->allow_extra_args(false);
  const std::pair<const char*, const char*> flags[] = {
      {"--seed", "seed"},       {"--mode", "mode"},         {"--steps", "steps"},
      {"--out", "out"},         {"--lr", "lr"},             {"--alpha", "alpha"},
      {"--beta-adv", "beta_adv"}, {"--beta-kl", "beta_kl"}, {"--clip-eps", "clip_eps"},
      {"--n1", "n1"},           {"--n2", "n2"},             {"--temperature", "temperature"},
      {"--threads", "threads"}, {"--optimizer", "optimizer"}, {"--batch-size", "batch_size"},
  };
  for (const auto& [flag, key] : flags) {
    const std::string k = key;
    cmd->add_option_function<std::string>(
        flag, [&common, k](const std::string& v) { common.overrides.emplace_back(k, v); }, "Sets config key " + k);
  }
}

kr1::CliConfig resolve(const Common& common) {
  std::optional<fs::path> path;
  if (common.config_path) path = *common.config_path;
  auto cfg = kr1::parse_config(path, common.overrides);
  kr1::set_thread_count(cfg.threads);
  return cfg;
}

fs::path out_dir(const kr1::CliConfig& cfg, const char* fallback) {
  return cfg.out.empty() ? kr1::default_output_root() / fallback : fs::path(cfg.out);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw kr1::IoError("cannot write " + path.string());
  out << text;
}

void echo_config(const fs::path& dir, const kr1::CliConfig& cfg) {
  fs::create_directories(dir);
  write_text(dir / "config.json", kr1::config_json(cfg) + "\n");
}

struct LoadedPolicy {
  kr1::PolicyParams params;
  std::optional<kr1::PolicyParams> reference;
};

// Accepts either a bare policy checkpoint or a training checkpoint.
LoadedPolicy load_any(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw kr1::IoError("cannot read " + path.string());
  char magic[8] = {};
  in.read(magic, sizeof magic);
  if (std::memcmp(magic, "KR1TRAIN", 8) == 0) {
    auto st = kr1::restore_checkpoint(path);
    return {std::move(st.params), std::move(st.ref_params)};
  }
  return {kr1::load_policy(path), std::nullopt};
}

kr1::Dataset load_dataset(const fs::path& dir) {
  return {kr1::load_examples(dir / "train.jsonl"), kr1::load_examples(dir / "test.jsonl")};
}

int cmd_gen_world(const Common& common) {
  auto cfg = resolve(common);
  const auto dir = out_dir(cfg, "data");
  const auto world = kr1::generate_world(cfg.world);
  const auto data = kr1::make_dataset(world, cfg.n_train, cfg.n_test, cfg.test_keys, cfg.seed);
  echo_config(dir, cfg);
  kr1::save_world(world, dir / "world.jsonl");
  kr1::save_examples(data.train, dir / "train.jsonl");
  kr1::save_examples(data.test, dir / "test.jsonl");
  std::cout << json{{"world", (dir / "world.jsonl").string()},
                    {"facts", world.num_keys()},
                    {"vocab_size", world.vocab.size},
                    {"train", data.train.examples.size()},
                    {"test", data.test.examples.size()}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_pretrain(const Common& common, const std::string& data_dir) {
  auto cfg = resolve(common);
  const auto dir = out_dir(cfg, "pretrain");
  const auto world = kr1::load_world(fs::path(data_dir) / "world.jsonl");
  const auto summary = kr1::pretrain_world(world, cfg.pretrain);
  echo_config(dir, cfg);
  kr1::save_policy(summary.params, dir / "base.ckpt");
  const json s = {{"checkpoint", (dir / "base.ckpt").string()},
                  {"belief_accuracy", summary.belief_accuracy},
                  {"reading_accuracy", summary.reading_accuracy}};
  write_text(dir / "pretrain_summary.json", s.dump(2) + "\n");
  std::cout << s.dump() << '\n';
  return 0;
}

int cmd_train(const Common& common, const std::string& data_dir, const std::string& init,
              const std::string& resume) {
  auto cfg = resolve(common);
  const auto dir = out_dir(cfg, "train");
  const auto data = load_dataset(data_dir);
  kr1::TrainState state;
  if (!resume.empty()) {
    state = kr1::restore_checkpoint(resume);
    if (state.seed != cfg.seed) throw kr1::ConfigError("resume checkpoint was written with a different seed");
  } else {
    if (init.empty()) throw kr1::ConfigError("train needs --init (policy checkpoint) or --resume");
    state = kr1::make_train_state(load_any(init).params, cfg.seed, cfg.run.optimizer);
  }
  auto run = cfg.run;
  run.validate();
  echo_config(dir, cfg);
  const auto art = kr1::run_training(run, std::move(state), data.train, data.test, dir);
  std::cout << json{{"run", dir.string()},
                    {"mode", kr1::to_string(run.mode)},
                    {"steps", art.final_state.step},
                    {"acc_cq", kr1::format_metric(art.final_report.acc_cq)},
                    {"acc_tife", kr1::format_metric(art.final_report.acc_tife)},
                    {"acc_fite", kr1::format_metric(art.final_report.acc_fite)}}
                   .dump()
            << '\n';
  return 0;
}

void write_report(const fs::path& dir, const kr1::MetricReport& report) {
  write_text(dir / "report.json", kr1::report_json(report) + "\n");
  write_text(dir / "report.csv", kr1::csv_header() + "\n" + kr1::csv_row(report) + "\n");
}

int cmd_eval(const Common& common, const std::string& checkpoint, const std::string& data_dir,
             const std::string& label_checkpoint, const std::string& split) {
  auto cfg = resolve(common);
  const auto dir = out_dir(cfg, "eval");
  const auto evaluated = load_any(checkpoint);
  kr1::PolicyParams labeler = !label_checkpoint.empty() ? load_any(label_checkpoint).params
                              : evaluated.reference   ? *evaluated.reference
                                                      : evaluated.params;
  if (split != "train" && split != "test") throw kr1::ConfigError("--split must be train or test");
  const auto examples = kr1::load_examples(fs::path(data_dir) / (split + ".jsonl"));
  const auto records = kr1::predict(labeler, evaluated.params, examples.examples);
  const auto report = kr1::evaluate_records(records);
  fs::create_directories(dir);
  kr1::save_predictions(records, dir / "predictions.jsonl");
  write_report(dir, report);
  std::cout << kr1::csv_header() << '\n' << kr1::csv_row(report) << '\n';
  return 0;
}

int cmd_partition(const Common& common, const std::string& predictions, bool dump) {
  auto cfg = resolve(common);
  const auto records = kr1::load_predictions(predictions);
  const auto subsets = kr1::partition(kr1::labels_from(records));
  const auto report = kr1::evaluate_records(records);
  json sizes = {{"cq", subsets.cq.size()},     {"tife", subsets.tife.size()},
                {"fite", subsets.fite.size()}, {"fe", subsets.fe.size()},
                {"te", subsets.te.size()},     {"tite", subsets.tite.size()},
                {"tite_strict", subsets.tite_strict.size()}, {"fife", subsets.fife.size()},
                {"scti", subsets.scti.size()}, {"scfi", subsets.scfi.size()}};
  std::cout << json{{"subset_sizes", sizes}}.dump() << '\n'
            << kr1::csv_header() << '\n'
            << kr1::csv_row(report) << '\n';
  if (!cfg.out.empty()) {
    const fs::path dir = cfg.out;
    fs::create_directories(dir);
    write_report(dir, report);
    if (dump) {
      std::ofstream out(dir / "subsets.jsonl");
      const std::pair<const char*, const std::vector<std::size_t>*> sets[] = {
          {"tife", &subsets.tife}, {"fite", &subsets.fite}, {"fe", &subsets.fe},
          {"te", &subsets.te},     {"tite", &subsets.tite}, {"tite_strict", &subsets.tite_strict},
          {"fife", &subsets.fife}, {"scti", &subsets.scti}, {"scfi", &subsets.scfi}};
      for (std::size_t i = 0; i < records.size(); ++i) {
        json member = json::array();
        for (const auto& [name, set] : sets) {
          if (std::binary_search(set->begin(), set->end(), i)) member.push_back(name);
        }
        out << json{{"id", records[i].id}, {"subsets", member}}.dump() << '\n';
      }
    }
  }
  return 0;
}

int cmd_report(const Common& common, const std::vector<std::string>& runs) {
  auto cfg = resolve(common);
  std::ostringstream table;
  table << "run,mode,seed,steps," << kr1::csv_header() << '\n';
  for (const auto& r : runs) {
    std::ifstream in(fs::path(r) / "final_report.csv");
    if (!in) throw kr1::IoError("no final_report.csv under " + r);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    if (header != "mode,seed,steps," + kr1::csv_header()) throw kr1::ParseError(r + ": unexpected report columns");
    table << fs::path(r).filename().string() << ',' << row << '\n';
  }
  if (!cfg.out.empty()) write_text(cfg.out, table.str());
  std::cout << table.str();
  return 0;
}

void error_record(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-conflict policy optimization on synthetic worlds"};
  app.require_subcommand(1);

  Common common;
  std::string data_dir, init, resume, checkpoint, label_checkpoint, predictions, split = "test";
  std::vector<std::string> runs;
  bool dump = false;

  auto* gen = app.add_subcommand("gen-world", "Generate a world plus train/test example files");
  add_common(gen, common);

  auto* pre = app.add_subcommand("pretrain", "Fit the base policy to the world's belief table");
  add_common(pre, common);
  pre->add_option("--data", data_dir, "Directory written by gen-world")->required();

  auto* train = app.add_subcommand("train", "Run policy optimization (kr1, grpo_rag or grpo_norag)");
  add_common(train, common);
  train->add_option("--data", data_dir, "Directory written by gen-world")->required();
  train->add_option("--init", init, "Initial policy checkpoint");
  train->add_option("--resume", resume, "Training checkpoint to continue from");

  auto* eval = app.add_subcommand("eval", "Compute knowledge-conflict metrics for a checkpoint");
  add_common(eval, common);
  eval->add_option("--checkpoint", checkpoint, "Policy or training checkpoint")->required();
  eval->add_option("--data", data_dir, "Directory written by gen-world")->required();
  eval->add_option("--label-checkpoint", label_checkpoint,
                   "Policy defining parametric correctness (default: the run's reference policy)");
  eval->add_option("--split", split, "train or test");

  auto* part = app.add_subcommand("partition", "Metrics from an external prediction file");
  add_common(part, common);
  part->add_option("--predictions", predictions, "Line-delimited prediction records")->required();
  part->add_flag("--dump-subsets", dump, "Write per-example subset membership (needs --out)");

  auto* rep = app.add_subcommand("report", "Merge run directories into one comparison table");
  add_common(rep, common);
  rep->add_option("runs", runs, "Run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_record("usage", e.what());
    return 2;
  } catch (const kr1::Error& e) {
    error_record(e.kind(), e.what());
    return 1;
  }

  try {
    if (*gen) return cmd_gen_world(common);
    if (*pre) return cmd_pretrain(common, data_dir);
    if (*train) return cmd_train(common, data_dir, init, resume);
    if (*eval) return cmd_eval(common, checkpoint, data_dir, label_checkpoint, split);
    if (*part) return cmd_partition(common, predictions, dump);
    if (*rep) return cmd_report(common, runs);
  } catch (const kr1::Error& e) {
    error_record(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    error_record("internal", e.what());
    return 1;
  }
  return 0;
}
