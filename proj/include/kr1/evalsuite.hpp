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

#include "kr1/exec.hpp"
#include "kr1/policy.hpp"
#include "kr1/world.hpp"

namespace kr1 {

using Flags = std::vector<bool>;

// One evaluated example. Internal runs and external model outputs share
// this record; ti = query_only_correct, te = context_correct.
struct PredictionRecord {
  std::int64_t id = 0;
  bool query_only_correct = false;
  bool rag_correct = false;
  bool context_correct = false;
  bool self_conflict = false;
  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);
void save_predictions(std::span<const PredictionRecord> records, const std::filesystem::path& path);

// Greedy exact match under the query-only prompt p.
Flags label_parametric(const PolicyParams& params, std::span<const Example> examples, Exec exec = Exec::kParallel);
// Greedy exact match under the retrieval-augmented prompt p_ctx.
Flags rag_correctness(const PolicyParams& params, std::span<const Example> examples, Exec exec = Exec::kParallel);

// ti comes from `label_params` (the reference model whose parametric
// knowledge defines T_i/F_i); rag_correct from `eval_params`.
std::vector<PredictionRecord> predict(const PolicyParams& label_params, const PolicyParams& eval_params,
                                      std::span<const Example> examples, Exec exec = Exec::kParallel);

struct SubsetLabels {
  Flags ti;
  Flags te;
  Flags sc;
};

SubsetLabels labels_from(std::span<const PredictionRecord> records);

// Index sets over the labeled examples. CQ holds every non-self-conflict
// example; the T_e/F_e derived sets live inside CQ.
struct Subsets {
  std::vector<std::size_t> cq;
  std::vector<std::size_t> tife;         // T_i and F_e
  std::vector<std::size_t> fite;         // F_i and T_e
  std::vector<std::size_t> fe;
  std::vector<std::size_t> te;
  std::vector<std::size_t> tite;         // T_i or T_e
  std::vector<std::size_t> tite_strict;  // T_i and T_e
  std::vector<std::size_t> fife;         // F_i and F_e
  std::vector<std::size_t> scti;         // self-conflict, T_i
  std::vector<std::size_t> scfi;         // self-conflict, F_i
};

Subsets partition(const SubsetLabels& labels);

struct Metric {
  std::optional<double> value;  // absent when the subset is empty
  std::size_t size = 0;
};

struct MetricReport {
  Metric acc_cq, acc_tife, acc_fite, acc_fe, acc_te, acc_tite, acc_tite_strict, acc_fife;
  Metric acc_scti, acc_scfi, acc_sc;
  Metric union_upper;
};

MetricReport compute_metrics(const Flags& rag_correct, const Subsets& subsets);

// Share of examples answered correctly by either route.
double union_upper_bound(const Flags& rag_correct, const Flags& query_only_correct);

// Partition, metrics, and the union bound over CQ, in one call.
MetricReport evaluate_records(std::span<const PredictionRecord> records);

// Stable column order shared by the CSV summary and the comparison report.
std::vector<std::string> metric_columns();
std::vector<Metric> metric_values(const MetricReport& report);

std::string report_json(const MetricReport& report);
std::string csv_header();
std::string csv_row(const MetricReport& report);
// Fixed-precision rendering; empty for absent values.
std::string format_metric(const Metric& m);

}  // namespace kr1
