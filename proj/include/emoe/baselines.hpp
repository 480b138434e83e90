// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "emoe/moe.hpp"

namespace emoe {

struct TopPConfig {
  double p = 0.15;
  void validate() const;
};

struct AdaMoeConfig {
  std::size_t n_null = 0;     // 0 means 2 x N
  std::size_t k_nominal = 2;  // selection count over real + null slots

  std::size_t null_slots(std::size_t n_experts) const { return n_null == 0 ? 2 * n_experts : n_null; }
  void validate(std::size_t n_experts) const;
};

/// Smallest probability-sorted prefix (ties to the lower index) whose mass
/// reaches p; never empty. Returned ascending.
std::vector<std::size_t> top_p_select(std::span<const double> probs, double p);

struct AdaMoeSelection {
  std::vector<std::size_t> gating;  // all chosen slots (real and null), ascending
  std::vector<std::size_t> real;    // chosen slots below n_real, ascending
};

/// Top-k_nominal over real + null router columns. Nulls produce no output
/// but keep their share of the gate softmax.
AdaMoeSelection adamoe_select(std::span<const double> logits_extended, std::size_t n_real,
                              std::size_t k_nominal);

/// Mean number of real experts evaluated per record.
double mean_active_experts(std::span<const RoutingRecord> records);

}  // namespace emoe
