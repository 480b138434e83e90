// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/elastic.hpp"

#include <algorithm>
#include <string>

#include "emoe/errors.hpp"
#include "emoe/ops.hpp"

namespace emoe {

void ElasticConfig::validate(std::size_t n_experts) const {
  if (!(1 <= k_train && k_train <= k_ideal && k_ideal <= n_experts)) {
    throw ConfigError("elastic config requires 1 <= k_train <= k_ideal <= N, got k_train=" +
                      std::to_string(k_train) + " k_ideal=" + std::to_string(k_ideal) +
                      " N=" + std::to_string(n_experts));
  }
}

std::size_t sample_pool_size(const ElasticConfig& cfg, RngStream& rng) {
  if (cfg.k_train < 1 || cfg.k_train > cfg.k_ideal) throw ConfigError("sample_pool_size: invalid interval");
  return static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(cfg.k_train), static_cast<std::int64_t>(cfg.k_ideal)));
}

std::vector<std::size_t> sample_coact(std::span<const std::size_t> pool, std::size_t k_train, RngStream& rng) {
  if (k_train > pool.size()) {
    throw ConfigError("sample_coact: pool of " + std::to_string(pool.size()) + " smaller than k_train=" +
                      std::to_string(k_train));
  }
  std::vector<std::size_t> items(pool.begin(), pool.end());
  std::sort(items.begin(), items.end());
  if (std::adjacent_find(items.begin(), items.end()) != items.end()) {
    throw ConfigError("sample_coact: pool contains duplicate indices");
  }
  // Partial Fisher-Yates: the first k_train slots are a uniform k-subset.
  for (std::size_t i = 0; i < k_train; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(items.size() - 1)));
    std::swap(items[i], items[j]);
  }
  items.resize(k_train);
  std::sort(items.begin(), items.end());
  return items;
}

double pair_coactivation_prob(std::size_t k_ideal, std::size_t k_train) {
  if (k_train < 2) throw ConfigError("pair_coactivation_prob: pairs need k_train >= 2");
  if (k_train > k_ideal) throw ConfigError("pair_coactivation_prob: k_train exceeds k_ideal");
  const double kt = static_cast<double>(k_train);
  const double ki = static_cast<double>(k_ideal);
  return (kt * (kt - 1.0)) / (ki * (ki - 1.0));
}

namespace {

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace

double pair_coactivation_prob_binomial(std::size_t k_ideal, std::size_t k_train) {
  if (k_train < 2) throw ConfigError("pair_coactivation_prob: pairs need k_train >= 2");
  if (k_train > k_ideal) throw ConfigError("pair_coactivation_prob: k_train exceeds k_ideal");
  return binomial(k_ideal - 2, k_train - 2) / binomial(k_ideal, k_train);
}

RoutingRecord emoe_route(std::span<const double> logits, const ElasticConfig& cfg, const SamplingKey& key) {
  cfg.validate(logits.size());
  RoutingRecord rec;
  rec.token_index = key.token;
  rec.layer = key.layer;
  rec.full_probs = softmax(logits);
  if (!cfg.sampling_enabled || cfg.k_train == cfg.k_ideal) {
    rec.pool = top_k_select(logits, cfg.k_train);
    rec.selected = rec.pool;
  } else {
    RngStream size_rng = key.stream(RngPurpose::kPoolSize);
    RngStream subset_rng = key.stream(RngPurpose::kSubset);
    rec.pool = top_k_select(logits, sample_pool_size(cfg, size_rng));
    rec.selected = sample_coact(rec.pool, cfg.k_train, subset_rng);
  }
  std::vector<double> chosen;
  chosen.reserve(rec.selected.size());
  for (std::size_t i : rec.selected) chosen.push_back(logits[i]);
  rec.gate_weights = softmax(chosen);
  return rec;
}

}  // namespace emoe
