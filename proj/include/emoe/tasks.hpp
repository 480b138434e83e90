// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "emoe/tensor.hpp"

namespace emoe {

struct DatasetMeta {
  std::string generator;
  std::uint64_t seed = 0;
  std::size_t n_clusters = 0;
  std::size_t n_classes = 0;
  std::vector<std::size_t> cluster;  // cluster id per sample
};

struct Dataset {
  Tensor inputs;                     // [M x d]
  std::vector<std::size_t> targets;  // class per sample
  DatasetMeta meta;

  std::size_t size() const { return targets.size(); }
  std::size_t dim() const { return inputs.cols(); }
};

struct ClusterTeacherParams {
  std::size_t n_clusters = 8;
  std::size_t d = 16;
  std::size_t n_classes = 8;
  std::size_t m_per_cluster = 1280;
  double noise = 0.5;
  double center_scale = 1.0;
  std::uint64_t seed = 0;
};

/// Gaussian blobs around random centers; each cluster labels its samples
/// with its own frozen random linear teacher applied to the sample (argmax
/// over classes), so every cluster needs a different function.
/// Samples are emitted cluster by cluster.
Dataset gen_cluster_teacher(const ClusterTeacherParams& params);

/// Stratified shuffle-then-cut. Per-cluster train counts use largest-
/// remainder rounding so the total is round(fraction * M) and each cluster
/// is within one sample of its exact share. Samples keep their original
/// relative order inside each split.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Rows `idx` of a dataset.
Dataset subset(const Dataset& ds, const std::vector<std::size_t>& idx);

/// Writes `<stem>.bin` (little-endian doubles) and `<stem>.json` (shape,
/// targets, meta). Returns the two paths.
std::pair<std::filesystem::path, std::filesystem::path> save_dataset(const Dataset& ds,
                                                                      const std::filesystem::path& stem);
Dataset load_dataset(const std::filesystem::path& stem);

}  // namespace emoe
