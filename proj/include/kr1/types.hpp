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
#include <span>
#include <vector>

namespace kr1 {

using Token = std::int32_t;
using TokenSeq = std::vector<Token>;
using TokenSpan = std::span<const Token>;

// Reserved ids at the bottom of every vocabulary.
namespace special {
inline constexpr Token kEos = 0;
inline constexpr Token kQry = 1;
inline constexpr Token kCtx = 2;
inline constexpr Token kSep = 3;
inline constexpr std::int64_t kCount = 4;
}  // namespace special

}  // namespace kr1
