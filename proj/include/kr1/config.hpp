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
#include <string>
#include <utility>
#include <vector>

#include "kr1/objective.hpp"
#include "kr1/pipeline.hpp"
#include "kr1/trainer.hpp"
#include "kr1/world.hpp"

namespace kr1 {

// Everything a command can be configured with. Every key is optional in the
// config file; see config_keys() for names and defaults.
struct CliConfig {
  WorldSpec world;
  std::int64_t n_train = 200;
  std::int64_t n_test = 200;
  TestKeys test_keys = TestKeys::kShared;
  PretrainConfig pretrain{.epochs = 500, .lr = 0.2};
  RunConfig run;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out;

  CliConfig();
};

// Documented key names in file order.
std::vector<std::string> config_keys();

// Defaults, then the file (if any), then `overrides` (key, raw text) in order.
CliConfig parse_config(const std::optional<std::filesystem::path>& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides = {});

// Parses a JSON object of config keys on top of `base`.
CliConfig apply_config_text(CliConfig base, const std::string& text);

// Fully resolved config as pretty-printed JSON.
std::string config_json(const CliConfig& config);

// Closest known key by edit distance, empty if nothing is close.
std::string suggest_key(const std::string& unknown);

// KR1_OUT_ROOT or "runs".
std::filesystem::path default_output_root();

}  // namespace kr1
