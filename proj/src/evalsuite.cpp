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

#include "kr1/evalsuite.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "kr1/errors.hpp"
#include "kr1/rollout.hpp"

namespace kr1 {
namespace {

using nlohmann::json;

bool required_bool(const json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(where + ": missing field '" + key + "'");
  if (!it->is_boolean()) throw ParseError(where + ": field '" + key + "' must be a boolean");
  return it->get<bool>();
}

template <typename F>
Flags map_examples(std::span<const Example> examples, Exec exec, F&& fn) {
  const auto n = static_cast<std::int64_t>(examples.size());
  std::vector<char> out(examples.size(), 0);
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(examples[static_cast<std::size_t>(i)]);
  } else {
    for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(examples[static_cast<std::size_t>(i)]);
  }
  return Flags(out.begin(), out.end());
}

Metric accuracy(const Flags& correct, const std::vector<std::size_t>& subset) {
  Metric m;
  m.size = subset.size();
  if (subset.empty()) return m;
  std::size_t hits = 0;
  for (auto i : subset) hits += correct[i] ? 1 : 0;
  m.value = static_cast<double>(hits) / static_cast<double>(subset.size());
  return m;
}

json metric_json(const Metric& m) {
  return {{"value", m.value ? json(*m.value) : json(nullptr)}, {"size", m.size}};
}

}  // namespace

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<PredictionRecord> records;
  std::map<std::int64_t, std::size_t> first_line;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": malformed record: " + e.what());
    }
    if (!j.is_object()) throw ParseError(where + ": record must be an object");
    const auto id = j.find("id");
    if (id == j.end()) throw ParseError(where + ": missing field 'id'");
    if (!id->is_number_integer()) throw ParseError(where + ": field 'id' must be an integer");
    PredictionRecord r;
    r.id = id->get<std::int64_t>();
    r.query_only_correct = required_bool(j, "query_only_correct", where);
    r.rag_correct = required_bool(j, "rag_correct", where);
    r.context_correct = required_bool(j, "context_correct", where);
    r.self_conflict = required_bool(j, "self_conflict", where);
    const auto [it, inserted] = first_line.emplace(r.id, line_no);
    if (!inserted) {
      throw ConflictError(path.string() + ": duplicate id " + std::to_string(r.id) + " on lines " +
                          std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    records.push_back(r);
  }
  return records;
}

void save_predictions(std::span<const PredictionRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) {
    out << json{{"id", r.id},
                {"query_only_correct", r.query_only_correct},
                {"rag_correct", r.rag_correct},
                {"context_correct", r.context_correct},
                {"self_conflict", r.self_conflict}}
               .dump()
        << '\n';
  }
}

Flags label_parametric(const PolicyParams& params, std::span<const Example> examples, Exec exec) {
  return map_examples(examples, exec, [&](const Example& ex) -> char {
    const auto pp = make_prompts(ex);
    return reward(greedy_decode(params, pp.p), ex.gold_answer) > 0.0;
  });
}

Flags rag_correctness(const PolicyParams& params, std::span<const Example> examples, Exec exec) {
  return map_examples(examples, exec, [&](const Example& ex) -> char {
    const auto pp = make_prompts(ex);
    return reward(greedy_decode(params, pp.p_ctx), ex.gold_answer) > 0.0;
  });
}

std::vector<PredictionRecord> predict(const PolicyParams& label_params, const PolicyParams& eval_params,
                                      std::span<const Example> examples, Exec exec) {
  const auto ti = label_parametric(label_params, examples, exec);
  const auto rag = rag_correctness(eval_params, examples, exec);
  std::vector<PredictionRecord> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out.push_back({examples[i].id, ti[i], rag[i], examples[i].context_correct, examples[i].self_conflict});
  }
  return out;
}

SubsetLabels labels_from(std::span<const PredictionRecord> records) {
  SubsetLabels l;
  for (const auto& r : records) {
    l.ti.push_back(r.query_only_correct);
    l.te.push_back(r.context_correct);
    l.sc.push_back(r.self_conflict);
  }
  return l;
}

Subsets partition(const SubsetLabels& labels) {
  if (labels.te.size() != labels.ti.size() || labels.sc.size() != labels.ti.size()) {
    throw ShapeError("label vectors differ in length");
  }
  Subsets s;
  for (std::size_t i = 0; i < labels.ti.size(); ++i) {
    const bool ti = labels.ti[i];
    if (labels.sc[i]) {
      (ti ? s.scti : s.scfi).push_back(i);
      continue;
    }
    const bool te = labels.te[i];
    s.cq.push_back(i);
    (te ? s.te : s.fe).push_back(i);
    if (ti && !te) s.tife.push_back(i);
    if (!ti && te) s.fite.push_back(i);
    if (ti || te) s.tite.push_back(i);
    if (ti && te) s.tite_strict.push_back(i);
    if (!ti && !te) s.fife.push_back(i);
  }
  return s;
}

MetricReport compute_metrics(const Flags& rag_correct, const Subsets& s) {
  MetricReport r;
  r.acc_cq = accuracy(rag_correct, s.cq);
  r.acc_tife = accuracy(rag_correct, s.tife);
  r.acc_fite = accuracy(rag_correct, s.fite);
  r.acc_fe = accuracy(rag_correct, s.fe);
  r.acc_te = accuracy(rag_correct, s.te);
  r.acc_tite = accuracy(rag_correct, s.tite);
  r.acc_tite_strict = accuracy(rag_correct, s.tite_strict);
  r.acc_fife = accuracy(rag_correct, s.fife);
  r.acc_scti = accuracy(rag_correct, s.scti);
  r.acc_scfi = accuracy(rag_correct, s.scfi);
  r.acc_sc.size = s.scti.size() + s.scfi.size();
  if (r.acc_scti.value && r.acc_scfi.value) {
    r.acc_sc.value = 0.5 * (*r.acc_scti.value + *r.acc_scfi.value);
  } else if (r.acc_scti.value) {
    r.acc_sc.value = r.acc_scti.value;
  } else if (r.acc_scfi.value) {
    r.acc_sc.value = r.acc_scfi.value;
  }
  return r;
}

double union_upper_bound(const Flags& rag_correct, const Flags& query_only_correct) {
  if (rag_correct.size() != query_only_correct.size()) {
    throw ShapeError("union_upper_bound: " + std::to_string(rag_correct.size()) + " vs " +
                     std::to_string(query_only_correct.size()) + " flags");
  }
  if (rag_correct.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rag_correct.size(); ++i) hits += (rag_correct[i] || query_only_correct[i]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(rag_correct.size());
}

MetricReport evaluate_records(std::span<const PredictionRecord> records) {
  const auto labels = labels_from(records);
  Flags rag;
  for (const auto& r : records) rag.push_back(r.rag_correct);
  const auto subsets = partition(labels);
  auto report = compute_metrics(rag, subsets);
  Flags rag_cq, qo_cq;
  for (auto i : subsets.cq) {
    rag_cq.push_back(rag[i]);
    qo_cq.push_back(labels.ti[i]);
  }
  report.union_upper.size = subsets.cq.size();
  if (!subsets.cq.empty()) report.union_upper.value = union_upper_bound(rag_cq, qo_cq);
  return report;
}

std::vector<std::string> metric_columns() {
  return {"acc_cq",   "acc_tife", "acc_fite", "acc_fe", "acc_te", "acc_tite", "acc_tite_strict",
          "acc_fife", "acc_scti", "acc_scfi", "acc_sc", "union_upper"};
}

std::vector<Metric> metric_values(const MetricReport& r) {
  return {r.acc_cq,   r.acc_tife, r.acc_fite, r.acc_fe, r.acc_te, r.acc_tite, r.acc_tite_strict,
          r.acc_fife, r.acc_scti, r.acc_scfi, r.acc_sc, r.union_upper};
}

std::string format_metric(const Metric& m) {
  if (!m.value) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *m.value);
  return buf;
}

std::string report_json(const MetricReport& report) {
  json j = json::object();
  const auto names = metric_columns();
  const auto values = metric_values(report);
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = metric_json(values[i]);
  return j.dump(2);
}

std::string csv_header() {
  std::string out;
  for (const auto& c : metric_columns()) out += (out.empty() ? "" : ",") + c;
  return out;
}

std::string csv_row(const MetricReport& report) {
  std::string out;
  bool first = true;
  for (const auto& m : metric_values(report)) {
    if (!first) out += ',';
    out += format_metric(m);
    first = false;
  }
  return out;
}

}  // namespace kr1
