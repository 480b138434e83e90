// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emoe/config.hpp"
#include "emoe/drift.hpp"
#include "emoe/gradcheck.hpp"

namespace emoe {

/// Finite-difference check of the full training objective (CE + LB + HR) for
/// one EMoE step on a tiny random model (N=8, d=8, batch 4). Sampling keys are
/// fixed, so every probe sees the same pools and subsets.
GradCheckResult training_step_gradcheck(std::uint64_t seed, double eps = 1e-5);

struct AblationArm {
  std::string name;  // emoe | no-coact | no-hr | topk
  RunConfig config;
};

/// Full EMoE plus the two ablations and the Top-k baseline, all sharing `base`.
std::vector<AblationArm> ablation_arms(const RunConfig& base);

struct SeedRun {
  std::string arm;
  std::uint64_t seed = 0;
  std::uint64_t train_invocations = 0;
  std::vector<DriftRow> rows;  // one per k', drift from Top-k_train
  std::vector<DriftRow> reference_rows;  // one per k', drift from the arm's reference routing
};

/// Trains one arm for one seed and sweeps Top-k' on the eval split.
SeedRun run_arm(const AblationArm& arm, std::uint64_t seed, std::span<const std::size_t> k_primes);

/// Mean of a per-row field over runs of one arm at budget k'.
double mean_accuracy(std::span<const SeedRun> runs, const std::string& arm, std::size_t k_prime);

std::string ablation_csv(std::span<const SeedRun> runs);

}  // namespace emoe
