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
#include <iosfwd>
#include <span>
#include <vector>

#include "kr1/rng.hpp"
#include "kr1/types.hpp"

namespace kr1 {

// Parameters of the mean-pooled autoregressive policy, stored flat in the
// canonical layout: embeddings (vocab x d, row-major), projection
// (d x vocab, row-major), bias (vocab).
class PolicyParams {
 public:
  PolicyParams() = default;
  PolicyParams(std::int64_t vocab_size, std::int64_t dim);

  // Entries drawn from N(0, scale^2).
  static PolicyParams random(std::int64_t vocab_size, std::int64_t dim, double scale, std::uint64_t seed);

  static std::size_t flat_size(std::int64_t vocab_size, std::int64_t dim) {
    return static_cast<std::size_t>(2 * vocab_size * dim + vocab_size);
  }

  std::int64_t vocab_size() const { return vocab_; }
  std::int64_t dim() const { return dim_; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  std::span<double> embedding(Token t) { return flat().subspan(emb_offset(t), udim()); }
  std::span<const double> embedding(Token t) const { return flat().subspan(emb_offset(t), udim()); }
  // Row k of the projection: weights from embedding coordinate k to every token.
  std::span<double> projection_row(std::int64_t k) { return flat().subspan(proj_offset(k), uvocab()); }
  std::span<const double> projection_row(std::int64_t k) const { return flat().subspan(proj_offset(k), uvocab()); }
  std::span<double> bias() { return flat().subspan(bias_offset(), uvocab()); }
  std::span<const double> bias() const { return flat().subspan(bias_offset(), uvocab()); }

  std::size_t emb_offset(Token t) const { return static_cast<std::size_t>(t) * udim(); }
  std::size_t proj_offset(std::int64_t k) const {
    return static_cast<std::size_t>(vocab_ * dim_ + k * vocab_);
  }
  std::size_t bias_offset() const { return static_cast<std::size_t>(2 * vocab_ * dim_); }

  bool all_finite() const;

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;

 private:
  std::size_t udim() const { return static_cast<std::size_t>(dim_); }
  std::size_t uvocab() const { return static_cast<std::size_t>(vocab_); }

  std::int64_t vocab_ = 0;
  std::int64_t dim_ = 0;
  std::vector<double> data_;
};

// Same length and layout as PolicyParams::flat().
using GradVector = std::vector<double>;

struct LogProb {
  double total = 0.0;
  std::vector<double> per_token;
};

struct SampleOptions {
  double temperature = 0.9;
  bool greedy = false;
  std::int64_t max_len = 3;
};

// Next-token logits for a non-empty prefix.
std::vector<double> logits(const PolicyParams& params, TokenSpan prefix);

// Numerically stable log-softmax, in place.
void log_softmax_inplace(std::span<double> z);

LogProb log_prob(const PolicyParams& params, TokenSpan prompt, TokenSpan tokens);

// grad += sum_t weights[t] * d/dtheta log pi(tokens[t] | prompt, tokens[<t]).
// The building block for every objective gradient.
void accumulate_log_prob_grad(const PolicyParams& params, TokenSpan prompt, TokenSpan tokens,
                              std::span<const double> weights, std::span<double> grad);

GradVector grad_log_prob(const PolicyParams& params, TokenSpan prompt, TokenSpan tokens);

TokenSeq sample(const PolicyParams& params, TokenSpan prompt, const SampleOptions& options, Rng& rng);

TokenSeq greedy_decode(const PolicyParams& params, TokenSpan prompt, std::int64_t max_len = 3);

struct TrainingPair {
  TokenSeq prompt;
  TokenSeq target;  // includes the terminating EOS
};

struct PretrainResult {
  PolicyParams params;
  // Share of pairs whose greedy decode reproduces the target exactly.
  double greedy_accuracy = 0.0;
};

// Per-pair stochastic gradient ascent on log pi(target | prompt), visiting
// pairs in a seeded order each epoch.
PretrainResult pretrain(PolicyParams params, std::span<const TrainingPair> pairs, std::int64_t epochs,
                        double lr, std::uint64_t seed = 0);

double greedy_accuracy(const PolicyParams& params, std::span<const TrainingPair> pairs);

// Versioned little-endian binary dump: magic, version, shapes, raw doubles.
void write_params(std::ostream& out, const PolicyParams& params);
PolicyParams read_params(std::istream& in);
void save_policy(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_policy(const std::filesystem::path& path);

}  // namespace kr1
