// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <numeric>

#include "emoe/elastic.hpp"
#include "emoe/errors.hpp"
#include "emoe/moe.hpp"
#include "emoe/rng.hpp"

namespace emoe {
namespace {

constexpr double kAlpha = 0.001;

double chi_square_critical(std::size_t bins) {
  const boost::math::chi_squared dist(static_cast<double>(bins - 1));
  return boost::math::quantile(boost::math::complement(dist, kAlpha));
}

template <class Key>
double chi_square(const std::map<Key, std::size_t>& counts, std::size_t bins, std::size_t draws) {
  const double expected = static_cast<double>(draws) / static_cast<double>(bins);
  double stat = 0.0;
  for (const auto& [key, c] : counts) stat += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  stat += static_cast<double>(bins - counts.size()) * expected;  // unseen bins
  return stat;
}

// All k-subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<std::size_t>> subsets(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
  do {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i) if (mask[i]) s.push_back(i);
    out.push_back(s);
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return out;
}

double binom(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

TEST(ElasticConfig, Validation) {
  EXPECT_NO_THROW((ElasticConfig{2, 8, true}.validate(16)));
  EXPECT_NO_THROW((ElasticConfig{1, 1, true}.validate(2)));
  EXPECT_THROW((ElasticConfig{0, 8, true}.validate(16)), ConfigError);
  EXPECT_THROW((ElasticConfig{3, 2, true}.validate(16)), ConfigError);
  EXPECT_THROW((ElasticConfig{2, 17, true}.validate(16)), ConfigError);
}

TEST(SamplePoolSize, DegenerateIntervalIsConstant) {
  RngStream rng(1, RngPurpose::kPoolSize);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_pool_size(ElasticConfig{2, 2, true}, rng), 2u);
}

TEST(SamplePoolSize, UniformByChiSquare) {
  RngStream rng(2026, RngPurpose::kPoolSize);
  const ElasticConfig cfg{2, 8, true};
  std::map<std::size_t, std::size_t> counts;
  const std::size_t draws = 70000;
  for (std::size_t i = 0; i < draws; ++i) {
    const std::size_t s = sample_pool_size(cfg, rng);
    ASSERT_GE(s, 2u);
    ASSERT_LE(s, 8u);
    ++counts[s];
  }
  EXPECT_EQ(counts.size(), 7u);
  EXPECT_LT(chi_square(counts, 7, draws), chi_square_critical(7));
}

TEST(SamplePoolSize, IdenticalKeysGiveIdenticalSequences) {
  const ElasticConfig cfg{2, 8, true};
  RngStream a(5, RngPurpose::kPoolSize, 3, 11, 1), b(5, RngPurpose::kPoolSize, 3, 11, 1);
  RngStream c(5, RngPurpose::kPoolSize, 3, 12, 1);
  std::vector<std::size_t> sa, sb, sc;
  for (int i = 0; i < 64; ++i) {
    sa.push_back(sample_pool_size(cfg, a));
    sb.push_back(sample_pool_size(cfg, b));
    sc.push_back(sample_pool_size(cfg, c));
  }
  EXPECT_EQ(sa, sb);
  EXPECT_NE(sa, sc);
}

TEST(SampleCoact, ForcedSubsetAndErrors) {
  RngStream rng(3, RngPurpose::kSubset);
  const std::vector<std::size_t> pool{1, 4, 6};
  EXPECT_EQ(sample_coact(pool, 3, rng), pool);
  EXPECT_THROW(sample_coact(pool, 4, rng), ConfigError);
  const std::vector<std::size_t> dup{1, 1, 2};
  EXPECT_THROW(sample_coact(dup, 2, rng), ConfigError);
}

TEST(SampleCoact, FourPoolPairsByChiSquare) {
  RngStream rng(4, RngPurpose::kSubset);
  const std::vector<std::size_t> pool{0, 1, 2, 3};
  std::map<std::vector<std::size_t>, std::size_t> counts;
  const std::size_t draws = 60000;
  for (std::size_t i = 0; i < draws; ++i) ++counts[sample_coact(pool, 2, rng)];
  EXPECT_EQ(counts.size(), 6u);
  EXPECT_LT(chi_square(counts, 6, draws), chi_square_critical(6));
}

TEST(SampleCoact, EverySubsetEquiprobableForSmallPools) {
  std::uint64_t seed = 40;
  for (std::size_t s = 2; s <= 6; ++s) {
    for (std::size_t k = 1; k <= s; ++k) {
      const auto all = subsets(s, k);
      std::vector<std::size_t> pool(s);
      std::iota(pool.begin(), pool.end(), 10);  // offset labels
      RngStream rng(++seed, RngPurpose::kSubset);
      std::map<std::vector<std::size_t>, std::size_t> counts;
      const std::size_t draws = 2000 * all.size();
      for (std::size_t i = 0; i < draws; ++i) {
        auto sub = sample_coact(pool, k, rng);
        for (auto& v : sub) v -= 10;
        ++counts[sub];
      }
      EXPECT_EQ(counts.size(), all.size()) << "s=" << s << " k=" << k;
      if (all.size() > 1) {
        EXPECT_LT(chi_square(counts, all.size(), draws), chi_square_critical(all.size())) << "s=" << s << " k=" << k;
      }
    }
  }
}

TEST(SampleCoact, ContainedSortedDistinct) {
  RngStream meta(5, RngPurpose::kData);
  for (int c = 0; c < 10000; ++c) {
    const auto n = static_cast<std::size_t>(meta.uniform_int(1, 20));
    auto perm = permutation(40, meta);
    std::vector<std::size_t> pool(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n));
    const auto k = static_cast<std::size_t>(meta.uniform_int(1, static_cast<std::int64_t>(n)));
    RngStream rng(static_cast<std::uint64_t>(c), RngPurpose::kSubset);
    const auto sub = sample_coact(pool, k, rng);
    ASSERT_EQ(sub.size(), k);
    ASSERT_TRUE(std::is_sorted(sub.begin(), sub.end()));
    ASSERT_TRUE(std::adjacent_find(sub.begin(), sub.end()) == sub.end());
    for (auto v : sub) ASSERT_NE(std::find(pool.begin(), pool.end(), v), pool.end());
  }
}

TEST(PairCoactivation, Landmarks) {
  EXPECT_NEAR(pair_coactivation_prob(8, 2), 1.0 / 28.0, 1e-15);
  EXPECT_NEAR(pair_coactivation_prob(4, 2), 1.0 / 6.0, 1e-15);
  for (std::size_t k = 2; k <= 10; ++k) EXPECT_EQ(pair_coactivation_prob(k, k), 1.0);
  EXPECT_THROW(pair_coactivation_prob(8, 1), ConfigError);
  EXPECT_THROW(pair_coactivation_prob(3, 4), ConfigError);
}

TEST(PairCoactivation, ClosedFormsAgree) {
  for (std::size_t kt = 2; kt <= 6; ++kt) {
    for (std::size_t ki = kt; ki <= 16; ++ki) {
      const double simplified = pair_coactivation_prob(ki, kt);
      EXPECT_NEAR(simplified, pair_coactivation_prob_binomial(ki, kt), 1e-12) << ki << "," << kt;
      EXPECT_NEAR(simplified, binom(ki - 2, kt - 2) / binom(ki, kt), 1e-12);
    }
  }
}

TEST(PairCoactivation, EnumerationOfSubsets) {
  for (std::size_t ki = 2; ki <= 7; ++ki) {
    for (std::size_t kt = 2; kt <= ki; ++kt) {
      const auto all = subsets(ki, kt);
      const auto hits = std::count_if(all.begin(), all.end(), [](const auto& s) { return s[0] == 0 && s[1] == 1; });
      EXPECT_NEAR(pair_coactivation_prob(ki, kt), static_cast<double>(hits) / static_cast<double>(all.size()), 1e-12);
    }
  }
}

const std::vector<double> kFixedLogits{0.3, 2.0, -1.0, 1.4, 0.9, -0.2, 1.1, 0.0};  // ranks: 1,3,6,4,0,...

TEST(EmoeRoute, DisabledSamplingIsTopK) {
  RngStream::reset_draw_counts();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const RoutingRecord r = emoe_route(kFixedLogits, ElasticConfig{3, 6, false}, SamplingKey{seed, 0, seed, 0});
    EXPECT_EQ(r.selected, top_k_select(kFixedLogits, 3));
  }
  EXPECT_EQ(RngStream::draw_count(RngPurpose::kPoolSize), 0u);
  EXPECT_EQ(RngStream::draw_count(RngPurpose::kSubset), 0u);
}

TEST(EmoeRoute, DegenerateIntervalIsTopK) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const RoutingRecord r = emoe_route(kFixedLogits, ElasticConfig{3, 3, true}, SamplingKey{seed, 1, 2, 3});
    EXPECT_EQ(r.selected, top_k_select(kFixedLogits, 3));
    EXPECT_EQ(r.pool, r.selected);
  }
}

TEST(EmoeRoute, RecordShapeAndGateWeights) {
  const ElasticConfig cfg{2, 6, true};
  for (std::uint64_t t = 0; t < 500; ++t) {
    const RoutingRecord r = emoe_route(kFixedLogits, cfg, SamplingKey{9, 4, t, 1});
    ASSERT_EQ(r.selected.size(), 2u);  // same invocation count as Top-2
    ASSERT_GE(r.pool.size(), 2u);
    ASSERT_LE(r.pool.size(), 6u);
    EXPECT_EQ(r.pool, top_k_select(kFixedLogits, r.pool.size()));
    EXPECT_TRUE(std::includes(r.pool.begin(), r.pool.end(), r.selected.begin(), r.selected.end()));
    const double a = kFixedLogits[r.selected[0]], b = kFixedLogits[r.selected[1]];
    const double w0 = 1.0 / (1.0 + std::exp(b - a));
    EXPECT_NEAR(r.gate_weights[0], w0, 1e-15);
    EXPECT_NEAR(r.gate_weights[0] + r.gate_weights[1], 1.0, 1e-15);
  }
}

TEST(EmoeRoute, KeyedDrawsIgnoreCallOrder) {
  const ElasticConfig cfg{2, 8, true};
  std::vector<RoutingRecord> forward, backward;
  for (std::uint64_t t = 0; t < 32; ++t) forward.push_back(emoe_route(kFixedLogits, cfg, SamplingKey{1, 2, t, 0}));
  for (std::uint64_t t = 32; t-- > 0;) backward.push_back(emoe_route(kFixedLogits, cfg, SamplingKey{1, 2, t, 0}));
  std::reverse(backward.begin(), backward.end());
  for (std::size_t i = 0; i < 32; ++i) EXPECT_EQ(forward[i].selected, backward[i].selected);
}

// Exhaustive oracle over pool sizes and subsets for pair frequencies.
std::map<std::vector<std::size_t>, double> enumerate_pair_distribution(std::span<const double> logits,
                                                                      const ElasticConfig& cfg) {
  std::map<std::vector<std::size_t>, double> dist;
  const double p_size = 1.0 / static_cast<double>(cfg.k_ideal - cfg.k_train + 1);
  for (std::size_t s = cfg.k_train; s <= cfg.k_ideal; ++s) {
    const auto pool = top_k_select(logits, s);
    const auto subs = subsets(s, cfg.k_train);
    for (const auto& sub : subs) {
      std::vector<std::size_t> picked;
      for (auto i : sub) picked.push_back(pool[i]);
      std::sort(picked.begin(), picked.end());
      dist[picked] += p_size / static_cast<double>(subs.size());
    }
  }
  return dist;
}

TEST(EmoeRoute, PairFrequenciesMatchEnumerationOracle) {
  const ElasticConfig cfg{2, 4, true};
  const auto oracle = enumerate_pair_distribution(kFixedLogits, cfg);
  // Top-two experts (indices 1 and 3) sit in every pool: (1/3)(1 + 1/3 + 1/6).
  const std::vector<std::size_t> top2{1, 3};
  EXPECT_NEAR(oracle.at(top2), 0.5, 1e-15);
  double sum = 0.0;
  for (const auto& [k, p] : oracle) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-15);

  const std::size_t draws = 60000;
  std::map<std::vector<std::size_t>, std::size_t> counts;
  for (std::size_t t = 0; t < draws; ++t) ++counts[emoe_route(kFixedLogits, cfg, SamplingKey{77, 0, t, 0}).selected];
  for (const auto& [pair, c] : counts) ASSERT_TRUE(oracle.count(pair)) << "pair outside every pool";

  const double p = oracle.at(top2);
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(draws));
  EXPECT_NEAR(static_cast<double>(counts[top2]) / static_cast<double>(draws), p, 3 * sigma);

  double stat = 0.0;
  for (const auto& [pair, q] : oracle) {
    const double expected = q * static_cast<double>(draws);
    const double got = static_cast<double>(counts[pair]);
    stat += (got - expected) * (got - expected) / expected;
  }
  const boost::math::chi_squared dist(static_cast<double>(oracle.size() - 1));
  EXPECT_LT(stat, boost::math::quantile(boost::math::complement(dist, kAlpha)));
}

TEST(EmoeRoute, TopTwoCoSelectionAtLeastClosedForm) {
  const ElasticConfig cfg{2, 8, true};
  const std::size_t draws = 100000;
  std::size_t hits = 0;
  const std::vector<std::size_t> top2{1, 3};
  for (std::size_t t = 0; t < draws; ++t) {
    if (emoe_route(kFixedLogits, cfg, SamplingKey{123, 5, t, 2}).selected == top2) ++hits;
  }
  const double p = pair_coactivation_prob(cfg.k_ideal, cfg.k_train);
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(draws));
  EXPECT_GE(static_cast<double>(hits) / static_cast<double>(draws), p - 3 * sigma);
}

}  // namespace
}  // namespace emoe
