// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "emoe/config.hpp"
#include "emoe/diagnostics.hpp"
#include "emoe/model.hpp"

namespace emoe {

struct StepMetrics {
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  double ce = 0.0;
  double lb = 0.0;
  double hr = 0.0;
  double total = 0.0;
  double mean_k = 0.0;
  std::uint64_t invocations = 0;
  std::vector<double> hr_per_layer;
  std::vector<double> lb_per_layer;
};

std::string to_jsonl(const StepMetrics& m);

/// Raised when a loss or gradient stops being finite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::uint64_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  std::uint64_t step() const noexcept { return step_; }

 private:
  std::uint64_t step_;
};

struct TrainOptions {
  /// When set, metrics.jsonl, config.ini, per-epoch checkpoints and training
  /// co-occurrence matrices are written below this directory.
  std::optional<std::filesystem::path> output_dir;
};

struct TrainResult {
  MoeModel model;
  std::vector<StepMetrics> metrics;
  std::uint64_t total_invocations = 0;
  std::vector<double> epoch_mean_total;
  /// Routing co-occurrence of the last training epoch, one per layer.
  std::vector<CoOccurrenceMatrix> final_epoch_cooc;
};

/// Trains on the train split of config.task generated from seeds.data.
TrainResult train(const RunConfig& config, const TrainOptions& options = {});

/// Trains on an explicit dataset.
TrainResult train(const RunConfig& config, const Dataset& train_set, const TrainOptions& options = {});

}  // namespace emoe
