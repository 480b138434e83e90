// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "emoe/checkpoint.hpp"
#include "emoe/model.hpp"
#include "emoe/tasks.hpp"

namespace emoe {

struct EvalResult {
  std::size_t n_tokens = 0;
  double eval_loss = 0.0;   // mean cross-entropy
  double accuracy = 0.0;    // fraction in [0, 1]
  double mean_active = 0.0; // real experts per token per layer
  std::uint64_t invocations = 0;
  std::vector<double> entropy_per_layer;
  double mean_entropy = 0.0;
  std::vector<std::vector<RoutingRecord>> records;  // [layer][token], dataset order
};

/// Serial reference: forward the dataset in chunks of `chunk` rows on one
/// thread. Token ids are dataset row indices.
EvalResult evaluate_serial(const MoeModel& model, const Dataset& data, const RoutingMode& mode,
                           std::size_t chunk = 256);

/// Chunks run on OpenMP threads. Every per-token quantity is independent of
/// chunk membership and reductions run in dataset order afterwards, so the
/// result equals evaluate_serial bit for bit.
EvalResult evaluate_parallel(const MoeModel& model, const Dataset& data, const RoutingMode& mode,
                             std::size_t chunk = 256);

/// Deterministic Top-k' evaluation of a checkpoint; k' must lie in [1, N].
EvalResult evaluate(const Checkpoint& ckpt, const Dataset& data, std::size_t k_prime);

/// Inference routing for a numeric budget under the model's own mode:
/// Top-k' for topk/emoe, threshold p for topp, k_nominal for adamoe.
RoutingMode budget_routing(RunMode mode, double budget);

}  // namespace emoe
