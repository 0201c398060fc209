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

namespace kr1 {

// kSerial is the reference path; kParallel must reproduce it bit for bit.
enum class Exec { kSerial, kParallel };

// Sets the OpenMP team size; values < 1 leave the runtime default.
void set_thread_count(int threads);
int max_threads();

}  // namespace kr1
