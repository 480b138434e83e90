// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "emoe/moe.hpp"
#include "emoe/rng.hpp"

namespace emoe {

/// Stochastic co-activation settings: train on k_train experts sampled from
/// a top-scoring pool whose size is drawn from [k_train, k_ideal].
struct ElasticConfig {
  std::size_t k_train = 2;
  std::size_t k_ideal = 8;
  bool sampling_enabled = true;

  /// Throws ConfigError unless 1 <= k_train <= k_ideal <= n_experts.
  void validate(std::size_t n_experts) const;
};

/// Identifies the per-token random streams of one routing decision.
struct SamplingKey {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::uint64_t token = 0;
  std::uint64_t layer = 0;

  RngStream stream(RngPurpose purpose) const { return RngStream(seed, purpose, step, token, layer); }
};

/// Pool size drawn uniformly from [k_train, k_ideal].
std::size_t sample_pool_size(const ElasticConfig& cfg, RngStream& rng);

/// Uniform k_train-subset of `pool`, ascending. Every subset is equiprobable.
std::vector<std::size_t> sample_coact(std::span<const std::size_t> pool, std::size_t k_train, RngStream& rng);

/// P(i, j both sampled | i, j in pool) = C(k_ideal-2, k_train-2) / C(k_ideal, k_train),
/// evaluated as k_train (k_train-1) / (k_ideal (k_ideal-1)).
double pair_coactivation_prob(std::size_t k_ideal, std::size_t k_train);

/// Same probability as the literal binomial ratio (used to cross-check the
/// simplified form; overflows for large arguments).
double pair_coactivation_prob_binomial(std::size_t k_ideal, std::size_t k_train);

/// Training-time routing of one token: pool = top-k~ with k~ sampled,
/// selected = uniform k_train-subset of the pool, weights = subset softmax.
/// With sampling disabled this is plain top-k_train routing and draws nothing.
RoutingRecord emoe_route(std::span<const double> logits, const ElasticConfig& cfg, const SamplingKey& key);

}  // namespace emoe
