// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace emoe {

enum class RngPurpose : std::uint8_t { kPoolSize = 0, kSubset = 1, kData = 2, kInit = 3 };
inline constexpr std::size_t kRngPurposeCount = 4;

const char* purpose_name(RngPurpose p);

/// Keyed random stream.
///
/// The key (seed, purpose, step, token, layer) fully determines the sequence,
/// independent of batch layout or which thread draws. Values come from a
/// splitmix64 counter sequence over a hashed key; integer and normal draws
/// are implemented here (not via <random> distributions) so sequences are
/// identical across standard libraries.
class RngStream {
 public:
  RngStream(std::uint64_t seed, RngPurpose purpose, std::uint64_t step = 0, std::uint64_t token = 0,
            std::uint64_t layer = 0);

  std::uint64_t next_u64();
  /// Uniform integer on [lo, hi] inclusive (unbiased, rejection sampled).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();
  /// Standard normal (Box-Muller).
  double normal();

  RngPurpose purpose() const noexcept { return purpose_; }

  /// Process-wide number of next_u64() calls per purpose. Evaluation paths
  /// are required to leave the sampling purposes untouched.
  static std::uint64_t draw_count(RngPurpose p);
  static void reset_draw_counts();

 private:
  std::uint64_t state_;
  RngPurpose purpose_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, RngStream& rng);

}  // namespace emoe
