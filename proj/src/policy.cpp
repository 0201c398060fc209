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

#include "kr1/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "kr1/errors.hpp"

namespace kr1 {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

constexpr char kPolicyMagic[8] = {'K', 'R', '1', 'P', 'O', 'L', 'C', 'Y'};
constexpr std::uint32_t kPolicyVersion = 1;

void check_tokens(const PolicyParams& params, TokenSpan tokens) {
  for (Token t : tokens) {
    if (t < 0 || t >= params.vocab_size()) {
      throw DomainError("token id " + std::to_string(t) + " outside vocabulary of size " +
                        std::to_string(params.vocab_size()));
    }
  }
}

// Running sum of prefix embeddings; the pooled state is sum / count.
class PrefixPool {
 public:
  PrefixPool(const PolicyParams& params, TokenSpan prompt)
      : params_(params), sum_(static_cast<std::size_t>(params.dim()), 0.0) {
    for (Token t : prompt) push(t);
  }

  void push(Token t) {
    const auto e = params_.embedding(t);
    for (std::size_t k = 0; k < sum_.size(); ++k) sum_[k] += e[k];
    ++count_;
  }

  void mean(std::span<double> h) const {
    const double inv = 1.0 / static_cast<double>(count_);
    for (std::size_t k = 0; k < sum_.size(); ++k) h[k] = sum_[k] * inv;
  }

  std::int64_t count() const { return count_; }

 private:
  const PolicyParams& params_;
  std::vector<double> sum_;
  std::int64_t count_ = 0;
};

void project(const PolicyParams& params, std::span<const double> h, std::span<double> z) {
  const auto b = params.bias();
  std::copy(b.begin(), b.end(), z.begin());
  for (std::int64_t k = 0; k < params.dim(); ++k) {
    const double hk = h[static_cast<std::size_t>(k)];
    const auto row = params.projection_row(k);
    for (std::size_t v = 0; v < z.size(); ++v) z[v] += hk * row[v];
  }
}

Token argmax_lowest(std::span<const double> z) {
  // std::max_element returns the first maximum, i.e. the lowest token id.
  return static_cast<Token>(std::max_element(z.begin(), z.end()) - z.begin());
}

}  // namespace

PolicyParams::PolicyParams(std::int64_t vocab_size, std::int64_t dim)
    : vocab_(vocab_size), dim_(dim), data_(flat_size(vocab_size, dim), 0.0) {
  if (vocab_size < 1 || dim < 1) throw DomainError("policy shapes must be positive");
}

PolicyParams PolicyParams::random(std::int64_t vocab_size, std::int64_t dim, double scale, std::uint64_t seed) {
  PolicyParams p(vocab_size, dim);
  Rng rng{seed, 0x706f6c696379ULL};
  std::normal_distribution<double> normal(0.0, scale);
  for (auto& x : p.data_) x = normal(rng.engine());
  return p;
}

bool PolicyParams::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::vector<double> logits(const PolicyParams& params, TokenSpan prefix) {
  if (prefix.empty()) throw DomainError("logits need a non-empty prefix");
  check_tokens(params, prefix);
  PrefixPool pool(params, prefix);
  std::vector<double> h(static_cast<std::size_t>(params.dim()));
  pool.mean(h);
  std::vector<double> z(static_cast<std::size_t>(params.vocab_size()));
  project(params, h, z);
  return z;
}

void log_softmax_inplace(std::span<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double x : z) s += std::exp(x - m);
  const double lse = m + std::log(s);
  for (double& x : z) x -= lse;
}

LogProb log_prob(const PolicyParams& params, TokenSpan prompt, TokenSpan tokens) {
  if (prompt.empty()) throw DomainError("log_prob needs a non-empty prompt");
  if (tokens.empty()) throw DomainError("log_prob needs a non-empty token sequence");
  check_tokens(params, prompt);
  check_tokens(params, tokens);
  PrefixPool pool(params, prompt);
  std::vector<double> h(static_cast<std::size_t>(params.dim()));
  std::vector<double> z(static_cast<std::size_t>(params.vocab_size()));
  LogProb out;
  out.per_token.reserve(tokens.size());
  for (Token t : tokens) {
    pool.mean(h);
    project(params, h, z);
    log_softmax_inplace(z);
    const double lp = z[static_cast<std::size_t>(t)];
    out.per_token.push_back(lp);
    out.total += lp;
    pool.push(t);
  }
  return out;
}

void accumulate_log_prob_grad(const PolicyParams& params, TokenSpan prompt, TokenSpan tokens,
                              std::span<const double> weights, std::span<double> grad) {
  if (weights.size() != tokens.size()) throw ShapeError("one weight per token required");
  if (grad.size() != params.flat().size()) throw ShapeError("gradient length does not match parameters");
  if (prompt.empty()) throw DomainError("log_prob needs a non-empty prompt");
  check_tokens(params, prompt);
  check_tokens(params, tokens);

  const auto V = static_cast<std::size_t>(params.vocab_size());
  const auto d = static_cast<std::size_t>(params.dim());
  PrefixPool pool(params, prompt);
  std::vector<double> h(d), z(V), dh(d);
  std::vector<Token> prefix(prompt.begin(), prompt.end());

  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const double w = weights[t];
    if (w != 0.0) {
      pool.mean(h);
      project(params, h, z);
      log_softmax_inplace(z);
      // z becomes g = w * (onehot - softmax).
      for (std::size_t v = 0; v < V; ++v) z[v] = -w * std::exp(z[v]);
      z[static_cast<std::size_t>(tokens[t])] += w;

      auto gb = grad.subspan(params.bias_offset(), V);
      for (std::size_t v = 0; v < V; ++v) gb[v] += z[v];
      for (std::size_t k = 0; k < d; ++k) {
        auto gp = grad.subspan(params.proj_offset(static_cast<std::int64_t>(k)), V);
        const auto row = params.projection_row(static_cast<std::int64_t>(k));
        const double hk = h[k];
        double acc = 0.0;
        for (std::size_t v = 0; v < V; ++v) {
          gp[v] += hk * z[v];
          acc += row[v] * z[v];
        }
        dh[k] = acc / static_cast<double>(pool.count());
      }
      for (Token u : prefix) {
        auto ge = grad.subspan(params.emb_offset(u), d);
        for (std::size_t k = 0; k < d; ++k) ge[k] += dh[k];
      }
    }
    pool.push(tokens[t]);
    prefix.push_back(tokens[t]);
  }
}

GradVector grad_log_prob(const PolicyParams& params, TokenSpan prompt, TokenSpan tokens) {
  if (tokens.empty()) throw DomainError("log_prob needs a non-empty token sequence");
  GradVector g(params.flat().size(), 0.0);
  const std::vector<double> ones(tokens.size(), 1.0);
  accumulate_log_prob_grad(params, prompt, tokens, ones, g);
  return g;
}

TokenSeq sample(const PolicyParams& params, TokenSpan prompt, const SampleOptions& options, Rng& rng) {
  if (options.max_len < 1) throw DomainError("max_len must be at least 1");
  if (!options.greedy && !(options.temperature > 0.0)) throw DomainError("temperature must be positive");
  if (prompt.empty()) throw DomainError("sampling needs a non-empty prompt");
  check_tokens(params, prompt);
  PrefixPool pool(params, prompt);
  std::vector<double> h(static_cast<std::size_t>(params.dim()));
  std::vector<double> z(static_cast<std::size_t>(params.vocab_size()));
  TokenSeq out;
  while (static_cast<std::int64_t>(out.size()) < options.max_len) {
    pool.mean(h);
    project(params, h, z);
    Token next;
    if (options.greedy) {
      next = argmax_lowest(z);
    } else {
      for (double& x : z) x /= options.temperature;
      log_softmax_inplace(z);
      for (double& x : z) x = std::exp(x);
      next = static_cast<Token>(rng.categorical(z));
    }
    out.push_back(next);
    if (next == special::kEos) break;
    pool.push(next);
  }
  return out;
}

TokenSeq greedy_decode(const PolicyParams& params, TokenSpan prompt, std::int64_t max_len) {
  Rng unused{0};
  return sample(params, prompt, {1.0, true, max_len}, unused);
}

double greedy_accuracy(const PolicyParams& params, std::span<const TrainingPair> pairs) {
  if (pairs.empty()) return 0.0;
  std::int64_t hits = 0;
#pragma omp parallel for reduction(+ : hits) schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(pairs.size()); ++i) {
    const auto& pr = pairs[static_cast<std::size_t>(i)];
    const auto out = greedy_decode(params, pr.prompt, static_cast<std::int64_t>(pr.target.size()) + 1);
    hits += out == pr.target ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

PretrainResult pretrain(PolicyParams params, std::span<const TrainingPair> pairs, std::int64_t epochs,
                        double lr, std::uint64_t seed) {
  if (!(lr > 0.0)) throw DomainError("pretrain learning rate must be positive");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  GradVector g(params.flat().size());
  auto flat = params.flat();
  for (std::int64_t epoch = 0; epoch < epochs; ++epoch) {
    Rng rng{seed, 0x70726574ULL, static_cast<std::uint64_t>(epoch)};
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (auto idx : order) {
      const auto& pr = pairs[idx];
      std::fill(g.begin(), g.end(), 0.0);
      const std::vector<double> ones(pr.target.size(), 1.0);
      accumulate_log_prob_grad(params, pr.prompt, pr.target, ones, g);
      for (std::size_t k = 0; k < g.size(); ++k) flat[k] += lr * g[k];
    }
  }
  PretrainResult r{std::move(params), 0.0};
  r.greedy_accuracy = greedy_accuracy(r.params, pairs);
  return r;
}

void write_params(std::ostream& out, const PolicyParams& params) {
  const std::int64_t shape[2] = {params.vocab_size(), params.dim()};
  out.write(kPolicyMagic, sizeof kPolicyMagic);
  out.write(reinterpret_cast<const char*>(&kPolicyVersion), sizeof kPolicyVersion);
  out.write(reinterpret_cast<const char*>(shape), sizeof shape);
  const auto flat = params.flat();
  out.write(reinterpret_cast<const char*>(flat.data()), static_cast<std::streamsize>(flat.size_bytes()));
}

PolicyParams read_params(std::istream& in) {
  char magic[8];
  std::uint32_t version = 0;
  std::int64_t shape[2] = {0, 0};
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kPolicyMagic, sizeof magic) != 0) {
    throw ParseError("not a policy checkpoint (bad magic)");
  }
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (version != kPolicyVersion) {
    throw VersionError("policy checkpoint version " + std::to_string(version) + ", expected " +
                       std::to_string(kPolicyVersion));
  }
  if (!in.read(reinterpret_cast<char*>(shape), sizeof shape) || shape[0] < 1 || shape[1] < 1 ||
      shape[0] > (1 << 20) || shape[1] > (1 << 16)) {
    throw ParseError("corrupt policy checkpoint header");
  }
  PolicyParams p(shape[0], shape[1]);
  auto flat = p.flat();
  if (!in.read(reinterpret_cast<char*>(flat.data()), static_cast<std::streamsize>(flat.size_bytes()))) {
    throw ParseError("truncated policy checkpoint");
  }
  return p;
}

void save_policy(const PolicyParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_params(out, params);
}

PolicyParams load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_params(in);
}

}  // namespace kr1
