// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "emoe/errors.hpp"
#include "emoe/experiments.hpp"
#include "emoe/losses.hpp"
#include "emoe/model.hpp"
#include "emoe/ops.hpp"
#include "emoe/rng.hpp"
#include "emoe/tape.hpp"
#include "oracles.hpp"

namespace emoe {
namespace {

using testing::Big;

double hr_of(const std::vector<double>& row) { return hr_loss(Tensor::row(row))[0]; }

std::vector<double> random_distribution(std::size_t n, RngStream& rng) {
  std::vector<double> z(n);
  for (double& v : z) v = 2.0 * rng.normal();
  return softmax(z);
}

TEST(HrLoss, Landmarks) {
  EXPECT_EQ(hr_of({0.25, 0.25, 0.25, 0.25}), 0.0);
  EXPECT_NEAR(hr_of({1.0, 0.0, 0.0, 0.0}), -std::log(4.0), 1e-15);
  EXPECT_NEAR(hr_of({0.0, 0.0, 1.0, 0.0}), -1.3862943611198906, 1e-15);
}

TEST(HrLoss, MatchesExtendedPrecisionOracle) {
  const std::vector<double> row{0.5, 0.3, 0.2};
  Big acc = 0;
  for (double h : row) acc -= Big(h) * boost::multiprecision::log(Big(h) * 3);
  EXPECT_NEAR(hr_of(row), static_cast<double>(acc), 1e-16);
}

TEST(HrLoss, MeanOverRows) {
  const Tensor two = Tensor::matrix(2, 4, {0.25, 0.25, 0.25, 0.25, 1, 0, 0, 0});
  EXPECT_NEAR(hr_loss(two)[0], -0.5 * std::log(4.0), 1e-15);
}

TEST(HrLoss, RejectsInvalidRows) {
  EXPECT_THROW(hr_loss(Tensor::row({0.5, 0.6})), DomainError);
  EXPECT_THROW(hr_loss(Tensor::row({1.2, -0.2})), DomainError);
  EXPECT_NO_THROW(hr_loss(Tensor::row({0.5, 0.5 + 5e-9})));
}

TEST(HrLoss, ZeroOnlyAtUniform) {
  RngStream rng(11, RngPurpose::kData);
  for (int i = 0; i < 1000; ++i) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 32));
    std::vector<double> row(n, 1.0 / static_cast<double>(n));
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    const auto k = (j + 1) % n;
    const double eps = 1e-6 + 0.5 * rng.uniform01() / static_cast<double>(n);
    row[j] += eps;
    row[k] -= eps;
    const double v = hr_of(row);
    ASSERT_LT(v, 0.0);
    ASSERT_GE(v, -std::log(static_cast<double>(n)) - 1e-12);
  }
}

TEST(HrLoss, SharpeningNeverIncreases) {
  RngStream rng(12, RngPurpose::kData);
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_distribution(8, rng);
    const double t = 1.0 + 3.0 * rng.uniform01();
    std::vector<double> q(p.size());
    double z = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) z += q[j] = std::pow(p[j], t);
    for (double& v : q) v /= z;
    ASSERT_LE(hr_of(q), hr_of(p) + 1e-12) << "t=" << t;
  }
}

TEST(HrGrad, UniformRowIsMinusOne) {
  for (double g : hr_grad_unconstrained(std::vector<double>(5, 0.2))) EXPECT_NEAR(g, -1.0, 1e-15);
  for (double g : forward_kl_grad(std::vector<double>(5, 0.2))) EXPECT_NEAR(g, 1.0, 1e-15);
  EXPECT_THROW(hr_grad_unconstrained(std::vector<double>{1.0, 0.0}), DomainError);
  EXPECT_THROW(forward_kl_grad(std::vector<double>{1.0, 0.0}), DomainError);
}

TEST(HrGrad, SmallProbabilityContrast) {
  const double h = 0.01;
  EXPECT_EQ(1.0 / h, 100.0);
  EXPECT_NEAR(-std::log(h), 4.6, 0.01);
  const std::size_t n = 4;
  const std::vector<double> row{h, 0.33, 0.33, 0.33};
  EXPECT_NEAR(forward_kl_grad(row)[0], 100.0 / static_cast<double>(n), 1e-12);
  EXPECT_NEAR(hr_grad_unconstrained(row)[0], -std::log(h * static_cast<double>(n)) - 1.0, 1e-15);
  EXPECT_GT(std::abs(forward_kl_grad(row)[0]), std::abs(hr_grad_unconstrained(row)[0]));
}

TEST(HrGrad, ForwardToReverseRatioDiverges) {
  double previous = 0.0;
  for (double h : {1e-2, 1e-3, 1e-4}) {
    const std::vector<double> row{h, (1 - h) / 3, (1 - h) / 3, (1 - h) / 3};
    const double ratio = forward_kl_grad(row)[0] / std::abs(hr_grad_unconstrained(row)[0]);
    EXPECT_NEAR(ratio, (1.0 / (4 * h)) / (-std::log(4 * h) - 1.0), 1e-9 * ratio);
    EXPECT_GT(ratio, 4.0 * previous);
    previous = ratio;
  }
  EXPECT_GT(previous, 300.0);
}

TEST(HrGrad, SoftmaxJacobianCompositionMatchesTape) {
  RngStream rng(13, RngPurpose::kData);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> z(7);
    for (double& v : z) v = 1.5 * rng.normal();
    Tape tape;
    const Tensor zt = tape.leaf(Tensor::row(z));
    const Tensor probs = softmax_row(zt);
    tape.backward(hr_loss(probs));
    const Tensor got = tape.grad(zt);

    const auto p = softmax(z);
    const auto g = hr_grad_unconstrained(p);
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += p[i] * g[i];
    for (std::size_t j = 0; j < p.size(); ++j) EXPECT_NEAR(got[j], p[j] * (g[j] - dot), 1e-9);
  }
}

RoutingRecord record(std::vector<std::size_t> selected, std::vector<double> probs) {
  RoutingRecord r;
  r.selected = std::move(selected);
  r.full_probs = std::move(probs);
  return r;
}

TEST(LoadBalance, UniformRoutingGivesCoefficient) {
  std::vector<RoutingRecord> recs;
  for (std::size_t e = 0; e < 4; ++e) recs.push_back(record({e}, std::vector<double>(4, 0.25)));
  EXPECT_NEAR(load_balance_loss(recs, 4, 0.01), 0.01, 1e-15);
  EXPECT_NEAR(load_balance_loss(recs, 4, 1.0), 1.0, 1e-15);
}

TEST(LoadBalance, CollapsedRoutingGivesCoefficientTimesN) {
  std::vector<RoutingRecord> recs(10, record({0}, {1.0, 0.0, 0.0, 0.0, 0.0}));
  EXPECT_NEAR(load_balance_loss(recs, 5, 0.01), 0.05, 1e-15);
}

TEST(LoadBalance, MatchesCountingOracle) {
  RngStream rng(14, RngPurpose::kData);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 6, width = 9;  // three null columns
    const auto tokens = static_cast<std::size_t>(rng.uniform_int(1, 20));
    std::vector<RoutingRecord> recs;
    std::vector<double> flat;
    for (std::size_t t = 0; t < tokens; ++t) {
      auto perm = permutation(n, rng);
      perm.resize(static_cast<std::size_t>(rng.uniform_int(0, 3)));
      std::sort(perm.begin(), perm.end());
      const auto p = random_distribution(width, rng);
      flat.insert(flat.end(), p.begin(), p.end());
      recs.push_back(record(perm, p));
    }
    std::vector<double> f(n, 0.0), pm(n, 0.0);
    double assignments = 0.0;
    for (const auto& r : recs) {
      for (auto e : r.selected) f[e] += 1.0, assignments += 1.0;
      for (std::size_t e = 0; e < n; ++e) pm[e] += r.full_probs[e] / static_cast<double>(tokens);
    }
    double want = 0.0;
    if (assignments > 0) {
      for (std::size_t e = 0; e < n; ++e) want += f[e] / assignments * pm[e];
    }
    want *= 0.01 * static_cast<double>(n);
    EXPECT_NEAR(load_balance_loss(recs, n, 0.01), want, 1e-15);
    EXPECT_NEAR(load_balance_loss(Tensor::matrix(tokens, width, flat), recs, n, 0.01)[0], want, 1e-15);
  }
}

TEST(LoadBalance, Errors) {
  EXPECT_THROW(load_balance_loss(std::vector<RoutingRecord>{}, 4), ConfigError);
  std::vector<RoutingRecord> bad{record({5}, std::vector<double>(4, 0.25))};
  EXPECT_THROW(load_balance_loss(bad, 4), DimensionError);
}

TEST(TotalLoss, Arithmetic) {
  const LossBundle b = total_loss(1.0, 0.1, -1.0, 0.5);
  EXPECT_NEAR(b.total, 0.6, 1e-15);
  EXPECT_EQ(b.lambda, 0.5);
  EXPECT_EQ(total_loss(1.25, 0.5, -3.0, 0.0).total, 1.75);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(total_loss(nan, 0.1, 0.0, 0.5), DomainError);
  EXPECT_THROW(total_loss(1.0, 0.1, INFINITY, 0.5), DomainError);
  const Tensor t = total_loss(Tensor::scalar(1.0), Tensor::scalar(0.1), Tensor::scalar(-1.0), 0.5);
  EXPECT_NEAR(t[0], 0.6, 1e-15);
}

TEST(TotalLoss, FullObjectivePassesGradCheck) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const GradCheckResult r = training_step_gradcheck(seed);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed;
    EXPECT_GT(r.checked, 1000u);
  }
}

// Router gradients of one training-style objective on a small model.
std::vector<std::vector<double>> router_grads(double lambda, bool include_hr) {
  const MoeModel model(ModelShape{4, 4, 6, 2, 6, 3, 0}, 21);
  Tape tape;
  const MoeModel live = model.on_tape(tape);
  const Tensor x = testing::random_matrix(8, 4, 22);
  const std::vector<std::size_t> ids{0, 1, 2, 3, 4, 5, 6, 7};
  const std::vector<std::size_t> targets{0, 1, 2, 0, 1, 2, 0, 1};
  const ForwardResult fr = model_forward(x, ids, EmoeRouting{ElasticConfig{2, 4, true}, 5, 0}, live);
  Tensor loss = cross_entropy(fr.logits, targets);
  for (std::size_t l = 0; l < 2; ++l) {
    const Tensor lb = load_balance_loss(fr.router_probs[l], fr.records[l], 6);
    loss = include_hr ? total_loss(loss, lb, hr_loss(fr.router_probs[l]), lambda) : add(loss, lb);
  }
  tape.backward(loss);
  std::vector<std::vector<double>> out;
  for (const auto& layer : live.layers()) out.push_back(tape.grad(layer.router()).values());
  return out;
}

TEST(TotalLoss, ZeroLambdaRemovesHrExactly) {
  EXPECT_EQ(router_grads(0.0, true), router_grads(0.0, false));
  EXPECT_NE(router_grads(0.5, true), router_grads(0.0, false));
}

}  // namespace
}  // namespace emoe
