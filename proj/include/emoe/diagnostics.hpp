// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emoe/moe.hpp"

namespace emoe {

/// Per-layer expert co-activation frequencies: values[i*n + j] is the share
/// of tokens whose selection contains both i and j.
struct CoOccurrenceMatrix {
  std::size_t layer = 0;
  std::size_t n = 0;
  std::size_t n_tokens = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

/// Exact pair counts before normalization. Counts from disjoint shards add.
struct CoOccurrenceCounts {
  std::size_t layer = 0;
  std::size_t n = 0;
  std::uint64_t n_tokens = 0;
  std::vector<std::uint64_t> counts;

  CoOccurrenceCounts(std::size_t layer_, std::size_t n_);
  void add(const RoutingRecord& rec);
  void merge(const CoOccurrenceCounts& other);
  CoOccurrenceMatrix normalized() const;
};

CoOccurrenceMatrix cooccurrence(std::span<const RoutingRecord> records, std::size_t n_experts);
/// OpenMP variant; per-thread integer counts merged by exact addition, so the
/// result is identical to cooccurrence().
CoOccurrenceMatrix cooccurrence_parallel(std::span<const RoutingRecord> records, std::size_t n_experts);

/// Frobenius distance between two co-occurrence matrices of equal size.
double cooc_distance(const CoOccurrenceMatrix& a, const CoOccurrenceMatrix& b);

/// Mean Shannon entropy (nats) of probability rows, each of width `n`.
double router_entropy(std::span<const double> rows, std::size_t n);
double router_entropy(std::span<const RoutingRecord> records);

/// {"layer", "n", "n_tokens", "values"} document.
std::string to_json(const CoOccurrenceMatrix& m);
CoOccurrenceMatrix cooccurrence_from_json(const std::string& text);

}  // namespace emoe
