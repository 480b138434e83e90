// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "emoe/errors.hpp"

namespace emoe {

void TopPConfig::validate() const {
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("top-p threshold must lie in (0, 1], got " + std::to_string(p));
}

void AdaMoeConfig::validate(std::size_t n_experts) const {
  const std::size_t width = n_experts + null_slots(n_experts);
  if (k_nominal < 1 || k_nominal > width) {
    throw ConfigError("AdaMoE k_nominal=" + std::to_string(k_nominal) + " outside [1, " + std::to_string(width) + "]");
  }
}

std::vector<std::size_t> top_p_select(std::span<const double> probs, double p) {
  TopPConfig{p}.validate();
  if (probs.empty()) throw DimensionError("top_p_select: empty distribution");
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

  // Zero-probability entries never join: with p = 1 a rounded running sum may
  // stay just below 1 after every nonzero entry is in.
  std::vector<std::size_t> chosen;
  double mass = 0.0;
  for (std::size_t i : order) {
    if (!chosen.empty() && probs[i] <= 0.0) break;
    chosen.push_back(i);
    mass += probs[i];
    if (mass >= p) break;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

AdaMoeSelection adamoe_select(std::span<const double> logits_extended, std::size_t n_real, std::size_t k_nominal) {
  if (k_nominal < 1 || k_nominal > logits_extended.size()) {
    throw ConfigError("adamoe_select: k_nominal=" + std::to_string(k_nominal) + " outside [1, " +
                      std::to_string(logits_extended.size()) + "]");
  }
  if (n_real > logits_extended.size()) throw DimensionError("adamoe_select: more real experts than router columns");
  std::vector<std::size_t> order(logits_extended.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return logits_extended[a] > logits_extended[b]; });
  AdaMoeSelection sel;
  sel.gating.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_nominal));
  std::sort(sel.gating.begin(), sel.gating.end());
  for (std::size_t i : sel.gating) {
    if (i < n_real) sel.real.push_back(i);
  }
  return sel;
}

double mean_active_experts(std::span<const RoutingRecord> records) {
  if (records.empty()) throw ConfigError("mean_active_experts: no records");
  double total = 0.0;
  for (const auto& r : records) total += static_cast<double>(r.selected.size());
  return total / static_cast<double>(records.size());
}

}  // namespace emoe
