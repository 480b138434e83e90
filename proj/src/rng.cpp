// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/rng.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "emoe/errors.hpp"

namespace emoe {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::array<std::atomic<std::uint64_t>, kRngPurposeCount>& counters() {
  static std::array<std::atomic<std::uint64_t>, kRngPurposeCount> c{};
  return c;
}

}  // namespace

const char* purpose_name(RngPurpose p) {
  switch (p) {
    case RngPurpose::kPoolSize: return "pool_size";
    case RngPurpose::kSubset: return "subset";
    case RngPurpose::kData: return "data";
    case RngPurpose::kInit: return "init";
  }
  return "unknown";
}

RngStream::RngStream(std::uint64_t seed, RngPurpose purpose, std::uint64_t step, std::uint64_t token,
                     std::uint64_t layer)
    : purpose_(purpose) {
  std::uint64_t h = mix64(seed + kGolden);
  h = mix64(h ^ (static_cast<std::uint64_t>(purpose) + 1) * kGolden);
  h = mix64(h ^ mix64(step + 0x632BE59BD9B4E019ULL));
  h = mix64(h ^ mix64(token + 0x8CB92BA72F3D8DD7ULL));
  h = mix64(h ^ mix64(layer + 0xD6E8FEB86659FD93ULL));
  state_ = h;
}

std::uint64_t RngStream::next_u64() {
  counters()[static_cast<std::size_t>(purpose_)].fetch_add(1, std::memory_order_relaxed);
  state_ += kGolden;
  return mix64(state_);
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw ConfigError("uniform_int: empty interval");
  const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
  if (range == 0) return static_cast<std::int64_t>(next_u64());  // full 64-bit span
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return lo + static_cast<std::int64_t>(x % range);
}

double RngStream::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t RngStream::draw_count(RngPurpose p) {
  return counters()[static_cast<std::size_t>(p)].load(std::memory_order_relaxed);
}

void RngStream::reset_draw_counts() {
  for (auto& c : counters()) c.store(0, std::memory_order_relaxed);
}

std::vector<std::size_t> permutation(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

}  // namespace emoe
