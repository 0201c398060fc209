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

#include "kr1/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "kr1/errors.hpp"

namespace kr1 {
namespace {

using nlohmann::json;
using Setter = std::function<void(CliConfig&, const json&)>;
using Getter = std::function<json(const CliConfig&)>;

struct Key {
  std::string name;
  Setter set;
  Getter get;
};

[[noreturn]] void mismatch(const std::string& key, const char* expected, const json& v) {
  throw ConfigError("type mismatch for key '" + key + "': expected " + expected + ", got " + v.dump());
}

template <typename T>
Key num(std::string name, std::function<T&(CliConfig&)> ref) {
  return {name,
          [name, ref](CliConfig& c, const json& v) {
            if constexpr (std::is_floating_point_v<T>) {
              if (!v.is_number()) mismatch(name, "a number", v);
            } else {
              if (!v.is_number_integer()) mismatch(name, "an integer", v);
              if constexpr (std::is_unsigned_v<T>) {
                if (!v.is_number_unsigned()) mismatch(name, "a non-negative integer", v);
              }
            }
            ref(c) = v.get<T>();
          },
          [ref](const CliConfig& c) { return json(ref(const_cast<CliConfig&>(c))); }};
}

Key flag(std::string name, std::function<bool&(CliConfig&)> ref) {
  return {name,
          [name, ref](CliConfig& c, const json& v) {
            if (!v.is_boolean()) mismatch(name, "a boolean", v);
            ref(c) = v.get<bool>();
          },
          [ref](const CliConfig& c) { return json(ref(const_cast<CliConfig&>(c))); }};
}

Key text(std::string name, std::function<void(CliConfig&, const std::string&)> set,
         std::function<std::string(const CliConfig&)> get) {
  return {name,
          [name, set](CliConfig& c, const json& v) {
            if (!v.is_string()) mismatch(name, "a string", v);
            set(c, v.get<std::string>());
          },
          [get](const CliConfig& c) { return json(get(c)); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      num<std::int64_t>("num_entities", [](CliConfig& c) -> auto& { return c.world.num_entities; }),
      num<std::int64_t>("num_attributes", [](CliConfig& c) -> auto& { return c.world.num_attributes; }),
      num<std::int64_t>("vocab_size", [](CliConfig& c) -> auto& { return c.world.vocab_size; }),
      num<double>("belief_error_rate", [](CliConfig& c) -> auto& { return c.world.belief_error_rate; }),
      num<double>("context_error_rate", [](CliConfig& c) -> auto& { return c.world.context_error_rate; }),
      num<double>("self_conflict_rate", [](CliConfig& c) -> auto& { return c.world.self_conflict_rate; }),
      num<std::int64_t>("n_train", [](CliConfig& c) -> auto& { return c.n_train; }),
      num<std::int64_t>("n_test", [](CliConfig& c) -> auto& { return c.n_test; }),
      text(
          "test_keys",
          [](CliConfig& c, const std::string& s) {
            if (s == "shared") c.test_keys = TestKeys::kShared;
            else if (s == "disjoint") c.test_keys = TestKeys::kDisjoint;
            else throw ConfigError("test_keys must be 'shared' or 'disjoint', got '" + s + "'");
          },
          [](const CliConfig& c) { return c.test_keys == TestKeys::kShared ? "shared" : "disjoint"; }),
      num<std::int64_t>("dim", [](CliConfig& c) -> auto& { return c.pretrain.dim; }),
      num<double>("init_scale", [](CliConfig& c) -> auto& { return c.pretrain.init_scale; }),
      num<std::int64_t>("pretrain_epochs", [](CliConfig& c) -> auto& { return c.pretrain.epochs; }),
      num<double>("pretrain_lr", [](CliConfig& c) -> auto& { return c.pretrain.lr; }),
      num<std::int64_t>("reading_per_key", [](CliConfig& c) -> auto& { return c.pretrain.reading_per_key; }),
      num<double>("context_trust", [](CliConfig& c) -> auto& { return c.pretrain.context_trust; }),
      num<double>("clip_eps", [](CliConfig& c) -> auto& { return c.run.hp.clip_eps; }),
      num<double>("beta_kl", [](CliConfig& c) -> auto& { return c.run.hp.beta_kl; }),
      num<double>("alpha", [](CliConfig& c) -> auto& { return c.run.hp.advantage.alpha; }),
      num<double>("beta_adv", [](CliConfig& c) -> auto& { return c.run.hp.advantage.beta_adv; }),
      num<double>("std_floor", [](CliConfig& c) -> auto& { return c.run.hp.advantage.std_floor; }),
      text(
          "std_form",
          [](CliConfig& c, const std::string& s) {
            if (s == "population") c.run.hp.advantage.std_form = StdForm::kPopulation;
            else if (s == "sample") c.run.hp.advantage.std_form = StdForm::kSample;
            else throw ConfigError("std_form must be 'population' or 'sample', got '" + s + "'");
          },
          [](const CliConfig& c) {
            return c.run.hp.advantage.std_form == StdForm::kPopulation ? "population" : "sample";
          }),
      num<std::int64_t>("n1", [](CliConfig& c) -> auto& { return c.run.hp.rollout.n1; }),
      num<std::int64_t>("n2", [](CliConfig& c) -> auto& { return c.run.hp.rollout.n2; }),
      num<double>("temperature", [](CliConfig& c) -> auto& { return c.run.hp.rollout.temperature; }),
      num<std::int64_t>("max_len", [](CliConfig& c) -> auto& { return c.run.hp.rollout.max_len; }),
      num<double>("lr", [](CliConfig& c) -> auto& { return c.run.hp.lr; }),
      text(
          "exploration_form",
          [](CliConfig& c, const std::string& s) {
            if (s == "raw_prob") c.run.hp.exploration_form = ExplorationForm::kRawProb;
            else if (s == "log_prob") c.run.hp.exploration_form = ExplorationForm::kLogProb;
            else throw ConfigError("exploration_form must be 'raw_prob' or 'log_prob', got '" + s + "'");
          },
          [](const CliConfig& c) { return to_string(c.run.hp.exploration_form); }),
      text(
          "optimizer", [](CliConfig& c, const std::string& s) { c.run.optimizer = optimizer_from_string(s); },
          [](const CliConfig& c) { return to_string(c.run.optimizer); }),
      text(
          "mode", [](CliConfig& c, const std::string& s) { c.run.mode = mode_from_string(s); },
          [](const CliConfig& c) { return to_string(c.run.mode); }),
      num<std::int64_t>("steps", [](CliConfig& c) -> auto& { return c.run.steps_max; }),
      num<std::int64_t>("batch_size", [](CliConfig& c) -> auto& { return c.run.batch_size; }),
      num<std::int64_t>("eval_every", [](CliConfig& c) -> auto& { return c.run.eval_every; }),
      num<std::int64_t>("checkpoint_every", [](CliConfig& c) -> auto& { return c.run.checkpoint_every; }),
      flag("trace_rollouts", [](CliConfig& c) -> auto& { return c.run.trace_rollouts; }),
      num<std::uint64_t>("seed", [](CliConfig& c) -> auto& { return c.seed; }),
      num<int>("threads", [](CliConfig& c) -> auto& { return c.threads; }),
      text(
          "out", [](CliConfig& c, const std::string& s) { c.out = s; }, [](const CliConfig& c) { return c.out; }),
  };
  return table;
}

const Key* find_key(const std::string& name) {
  for (const auto& k : keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

void apply(CliConfig& c, const std::string& name, const json& v) {
  const Key* k = find_key(name);
  if (!k) {
    std::string msg = "unknown config key '" + name + "'";
    if (auto s = suggest_key(name); !s.empty()) msg += "; did you mean '" + s + "'?";
    throw ConfigError(msg);
  }
  k->set(c, v);
}

// Flag values arrive as text: numbers and booleans are parsed as JSON
// scalars, anything else is taken as a string.
json scalar_from_text(const std::string& raw) {
  try {
    auto j = json::parse(raw);
    if (j.is_primitive()) return j;
  } catch (const json::parse_error&) {
  }
  return json(raw);
}

}  // namespace

CliConfig::CliConfig() {
  run.hp.lr = kToyLearningRate;
  run.optimizer = OptimizerKind::kAdam;
  run.checkpoint_every = 100;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : keys()) out.push_back(k.name);
  return out;
}

std::string suggest_key(const std::string& unknown) {
  std::string best;
  std::size_t best_d = 3;  // suggest only within two edits
  for (const auto& k : keys()) {
    const auto d = edit_distance(unknown, k.name);
    if (d < best_d) {
      best_d = d;
      best = k.name;
    }
  }
  return best;
}

CliConfig apply_config_text(CliConfig base, const std::string& text) {
  json doc;
  try {
    doc = json::parse(text.find_first_not_of(" \t\r\n") == std::string::npos ? std::string("{}") : text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [name, v] : doc.items()) apply(base, name, v);
  return base;
}

CliConfig parse_config(const std::optional<std::filesystem::path>& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
  CliConfig c;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("config file not found: " + path->string());
    std::stringstream ss;
    ss << in.rdbuf();
    c = apply_config_text(std::move(c), ss.str());
  }
  for (const auto& [name, raw] : overrides) apply(c, name, scalar_from_text(raw));
  c.world.seed = c.seed;
  c.run.seed = c.seed;
  c.pretrain.seed = c.seed;
  c.world.validate();
  c.run.validate();
  c.run.hp.validate();
  if (c.n_train < 1 || c.n_test < 0) throw ConfigError("need n_train >= 1 and n_test >= 0");
  if (c.pretrain.dim < 1 || !(c.pretrain.lr > 0.0)) throw ConfigError("pretrain needs dim >= 1 and lr > 0");
  return c;
}

std::string config_json(const CliConfig& config) {
  json j = json::object();
  for (const auto& k : keys()) j[k.name] = k.get(config);
  // nlohmann sorts object keys, which keeps the echo byte-stable.
  return j.dump(2);
}

std::filesystem::path default_output_root() {
  if (const char* env = std::getenv("KR1_OUT_ROOT"); env && *env) return env;
  return "runs";
}

}  // namespace kr1
