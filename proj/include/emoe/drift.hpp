// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emoe/checkpoint.hpp"
#include "emoe/diagnostics.hpp"
#include "emoe/evaluate.hpp"

namespace emoe {

/// One co-occurrence matrix per layer from an evaluation pass.
std::vector<CoOccurrenceMatrix> layer_cooccurrence(const EvalResult& res, std::size_t n_experts);

struct DriftRow {
  double budget = 0.0;
  std::vector<double> delta_per_layer;
  double mean_delta = 0.0;
  double eval_loss = 0.0;
  double accuracy = 0.0;
  double mean_entropy = 0.0;
  double mean_active = 0.0;
  std::uint64_t invocations = 0;
};

/// Frobenius drift of each budget's co-occurrence matrices from those of the
/// `reference` routing, all measured on `data`.
std::vector<DriftRow> drift_profile(const MoeModel& model, const Dataset& data, const RoutingMode& reference,
                                    std::span<const RoutingMode> budgets, std::span<const double> budget_values);

/// Top-k' drift from a Top-k_train reference.
std::vector<DriftRow> drift_profile(const MoeModel& model, const Dataset& data, std::size_t k_train,
                                    std::span<const std::size_t> k_primes);

struct EvalReport {
  std::string mode;
  std::string manifest_sha256;
  std::vector<DriftRow> rows;

  /// Header: budget,eval_loss,accuracy,mean_delta,mean_entropy,invocations
  std::string to_csv() const;
  std::string to_json() const;
};

/// Evaluates a checkpoint at each budget with its own routing family and
/// measures drift from its reference (training) routing.
EvalReport sweep(const Checkpoint& ckpt, const Dataset& data, std::span<const double> budgets);

}  // namespace emoe
