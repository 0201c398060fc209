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

#include "kr1/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kr1/errors.hpp"
#include "kr1/rng.hpp"

namespace kr1 {
namespace {

using nlohmann::json;

std::int64_t rounded_count(double rate, std::int64_t n) {
  return static_cast<std::int64_t>(std::llround(rate * static_cast<double>(n)));
}

void check_rate(const char* name, double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw DomainError(std::string(name) + " must lie in [0,1], got " + std::to_string(rate));
  }
}

// First k entries of a seeded shuffle of [0, n).
std::vector<std::int64_t> choose(std::int64_t n, std::int64_t k, Rng& rng) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (std::int64_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

// Uniform value from the attribute's range, excluding every token in `avoid`.
Token draw_value(const Vocab& vocab, std::int64_t attribute, std::initializer_list<Token> avoid,
                 Rng& rng) {
  const Token lo = vocab.value_begin(attribute);
  const auto range = static_cast<std::uint64_t>(vocab.values_per_attribute());
  for (;;) {
    const Token v = static_cast<Token>(lo + static_cast<Token>(rng.below(range)));
    if (std::find(avoid.begin(), avoid.end(), v) == avoid.end()) return v;
  }
}

json tokens_json(const TokenSeq& t) { return json(t); }

TokenSeq tokens_from(const json& j) { return j.get<TokenSeq>(); }

}  // namespace

std::int64_t WorldSpec::required_vocab() const {
  return num_entities + num_attributes + 2 * num_entities * num_attributes + special::kCount;
}

void WorldSpec::validate() const {
  if (num_entities < 1 || num_attributes < 1) {
    throw DomainError("world needs at least one entity and one attribute");
  }
  check_rate("belief_error_rate", belief_error_rate);
  check_rate("context_error_rate", context_error_rate);
  check_rate("self_conflict_rate", self_conflict_rate);
  if (vocab_size != 0 && vocab_size < required_vocab()) {
    throw CapacityError("vocab_size " + std::to_string(vocab_size) +
                        " too small; required minimum is " + std::to_string(required_vocab()));
  }
}

KnowledgeWorld generate_world(const WorldSpec& spec) {
  spec.validate();
  KnowledgeWorld world;
  world.spec = spec;
  world.vocab.num_entities = spec.num_entities;
  world.vocab.num_attributes = spec.num_attributes;
  world.vocab.size = spec.vocab_size == 0 ? spec.required_vocab() : spec.vocab_size;

  Rng rng{spec.seed, 0x776f726c64ULL};
  const std::int64_t keys = spec.num_entities * spec.num_attributes;
  world.facts.resize(static_cast<std::size_t>(keys));

  // Per attribute, golds take a random half of the value range.
  for (std::int64_t a = 0; a < spec.num_attributes; ++a) {
    const auto slots = choose(world.vocab.values_per_attribute(), spec.num_entities, rng);
    for (std::int64_t e = 0; e < spec.num_entities; ++e) {
      Fact& f = world.facts[static_cast<std::size_t>(e * spec.num_attributes + a)];
      f.entity = e;
      f.attribute = a;
      f.gold = static_cast<Token>(world.vocab.value_begin(a) + slots[static_cast<std::size_t>(e)]);
      f.belief = f.gold;
    }
  }
  for (auto key : choose(keys, rounded_count(spec.belief_error_rate, keys), rng)) {
    Fact& f = world.facts[static_cast<std::size_t>(key)];
    f.belief = draw_value(world.vocab, f.attribute, {f.gold}, rng);
  }
  return world;
}

ExampleSet build_examples(const KnowledgeWorld& world, std::int64_t n, double context_error_rate,
                          double self_conflict_rate, std::uint64_t seed, std::int64_t first_id) {
  check_rate("context_error_rate", context_error_rate);
  check_rate("self_conflict_rate", self_conflict_rate);
  const auto keys = static_cast<std::int64_t>(world.num_keys());
  if (n < 0 || n > keys) {
    throw CapacityError("requested " + std::to_string(n) + " examples but the world has only " +
                        std::to_string(keys) + " keys");
  }
  Rng rng{seed, 0x6578616dULL};
  const auto picked = choose(keys, n, rng);
  std::vector<char> wrong_ctx(static_cast<std::size_t>(n), 0);
  std::vector<char> conflict(static_cast<std::size_t>(n), 0);
  for (auto i : choose(n, rounded_count(context_error_rate, n), rng)) wrong_ctx[static_cast<std::size_t>(i)] = 1;
  for (auto i : choose(n, rounded_count(self_conflict_rate, n), rng)) conflict[static_cast<std::size_t>(i)] = 1;

  ExampleSet set;
  set.examples.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const Fact& f = world.facts[static_cast<std::size_t>(picked[static_cast<std::size_t>(i)])];
    Example ex;
    ex.id = first_id + i;
    ex.query = world.query(f);
    ex.gold_answer = {f.gold};
    ex.belief_answer = {f.belief};
    ex.context_correct = wrong_ctx[static_cast<std::size_t>(i)] == 0;
    ex.self_conflict = conflict[static_cast<std::size_t>(i)] != 0;

    const Token first = ex.context_correct ? f.gold : draw_value(world.vocab, f.attribute, {f.gold}, rng);
    ex.contexts.push_back(world.passage(f, first));
    if (ex.self_conflict) {
      const Token second = draw_value(world.vocab, f.attribute, {f.gold, first}, rng);
      ex.contexts.push_back(world.passage(f, second));
      if (rng.below(2) == 1) std::swap(ex.contexts[0], ex.contexts[1]);
    }
    set.examples.push_back(std::move(ex));
  }
  return set;
}

std::pair<ExampleSet, ExampleSet> split_examples(ExampleSet all, std::int64_t n_train) {
  if (n_train < 0 || n_train > static_cast<std::int64_t>(all.examples.size())) {
    throw CapacityError("n_train " + std::to_string(n_train) + " exceeds example count " +
                        std::to_string(all.examples.size()));
  }
  ExampleSet train, test;
  train.split = Split::kTrain;
  test.split = Split::kTest;
  auto mid = all.examples.begin() + n_train;
  train.examples.assign(std::make_move_iterator(all.examples.begin()), std::make_move_iterator(mid));
  test.examples.assign(std::make_move_iterator(mid), std::make_move_iterator(all.examples.end()));
  return {std::move(train), std::move(test)};
}

PromptPair make_prompts(const Example& example) {
  PromptPair pp;
  pp.p.reserve(example.query.size() + 1);
  pp.p.push_back(special::kQry);
  pp.p.insert(pp.p.end(), example.query.begin(), example.query.end());

  pp.p_ctx.push_back(special::kCtx);
  for (const auto& passage : example.contexts) {
    pp.p_ctx.insert(pp.p_ctx.end(), passage.begin(), passage.end());
    pp.p_ctx.push_back(special::kSep);
  }
  if (example.contexts.empty()) pp.p_ctx.push_back(special::kSep);
  pp.p_ctx.insert(pp.p_ctx.end(), pp.p.begin(), pp.p.end());
  return pp;
}

TokenSeq with_eos(const TokenSeq& answer) {
  TokenSeq t = answer;
  t.push_back(special::kEos);
  return t;
}

std::string to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

namespace {

Split split_from(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw ParseError("unknown split '" + s + "'");
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return in;
}

template <typename F>
void for_each_record(const std::filesystem::path& path, F&& fn) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line), line_no);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

void save_world(const KnowledgeWorld& world, const std::filesystem::path& path) {
  auto out = open_out(path);
  const auto& s = world.spec;
  json header = {{"kind", "world"},
                 {"num_entities", s.num_entities},
                 {"num_attributes", s.num_attributes},
                 {"vocab_size", world.vocab.size},
                 {"belief_error_rate", s.belief_error_rate},
                 {"context_error_rate", s.context_error_rate},
                 {"self_conflict_rate", s.self_conflict_rate},
                 {"seed", s.seed}};
  out << header.dump() << '\n';
  for (const auto& f : world.facts) {
    out << json{{"entity", f.entity}, {"attribute", f.attribute}, {"gold", f.gold}, {"belief", f.belief}}.dump()
        << '\n';
  }
}

KnowledgeWorld load_world(const std::filesystem::path& path) {
  KnowledgeWorld world;
  bool have_header = false;
  for_each_record(path, [&](const json& j, std::size_t line_no) {
    if (!have_header) {
      if (j.value("kind", "") != "world") {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": missing world header");
      }
      auto& s = world.spec;
      s.num_entities = j.at("num_entities").get<std::int64_t>();
      s.num_attributes = j.at("num_attributes").get<std::int64_t>();
      s.vocab_size = j.at("vocab_size").get<std::int64_t>();
      s.belief_error_rate = j.at("belief_error_rate").get<double>();
      s.context_error_rate = j.at("context_error_rate").get<double>();
      s.self_conflict_rate = j.at("self_conflict_rate").get<double>();
      s.seed = j.at("seed").get<std::uint64_t>();
      world.vocab = {s.vocab_size, s.num_entities, s.num_attributes};
      have_header = true;
      return;
    }
    world.facts.push_back({j.at("entity").get<std::int64_t>(), j.at("attribute").get<std::int64_t>(),
                           j.at("gold").get<Token>(), j.at("belief").get<Token>()});
  });
  if (!have_header) throw ParseError(path.string() + ": empty world file");
  if (static_cast<std::int64_t>(world.facts.size()) != world.spec.num_entities * world.spec.num_attributes) {
    throw ParseError(path.string() + ": fact count does not match header");
  }
  return world;
}

void save_examples(const ExampleSet& set, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& ex : set.examples) {
    json contexts = json::array();
    for (const auto& c : ex.contexts) contexts.push_back(tokens_json(c));
    json rec = {{"id", ex.id},
                {"split", to_string(set.split)},
                {"query", tokens_json(ex.query)},
                {"gold_answer", tokens_json(ex.gold_answer)},
                {"contexts", contexts},
                {"context_correct", ex.context_correct},
                {"self_conflict", ex.self_conflict},
                {"belief_answer", tokens_json(ex.belief_answer)}};
    out << rec.dump() << '\n';
  }
}

ExampleSet load_examples(const std::filesystem::path& path) {
  ExampleSet set;
  std::set<std::int64_t> seen;
  bool first = true;
  for_each_record(path, [&](const json& j, std::size_t line_no) {
    Example ex;
    ex.id = j.at("id").get<std::int64_t>();
    const Split split = split_from(j.at("split").get<std::string>());
    if (first) {
      set.split = split;
      first = false;
    } else if (split != set.split) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": mixed split labels");
    }
    if (!seen.insert(ex.id).second) {
      throw ConflictError(path.string() + ":" + std::to_string(line_no) + ": duplicate id " +
                          std::to_string(ex.id));
    }
    ex.query = tokens_from(j.at("query"));
    ex.gold_answer = tokens_from(j.at("gold_answer"));
    for (const auto& c : j.at("contexts")) ex.contexts.push_back(tokens_from(c));
    ex.context_correct = j.at("context_correct").get<bool>();
    ex.self_conflict = j.at("self_conflict").get<bool>();
    ex.belief_answer = tokens_from(j.at("belief_answer"));
    set.examples.push_back(std::move(ex));
  });
  return set;
}

}  // namespace kr1
