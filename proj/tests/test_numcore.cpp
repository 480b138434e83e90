// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "emoe/errors.hpp"
#include "emoe/gradcheck.hpp"
#include "emoe/kernels.hpp"
#include "emoe/ops.hpp"
#include "emoe/tape.hpp"
#include "oracles.hpp"

namespace emoe {
namespace {

using testing::Big;
using testing::random_matrix;

TEST(Tensor, RejectsBadShapesAndValues) {
  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor({0, 2}, {}), DimensionError);
  EXPECT_THROW(Tensor({1, 2}, {1, std::numeric_limits<double>::quiet_NaN()}), DomainError);
  EXPECT_THROW(Tensor({1}, {std::numeric_limits<double>::infinity()}), DomainError);
  const Tensor t = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.at(1, 2), 6.0);
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Tensor eye = Tensor::matrix(2, 2, {1, 0, 0, 1});
  const Tensor a = Tensor::matrix(2, 2, {0.5, -2, 3.25, 7});
  EXPECT_EQ(matmul(eye, a).values(), a.values());
}

TEST(Matmul, HandComputedColumn) {
  const Tensor r = matmul(Tensor::matrix(2, 2, {1, 2, 3, 4}), Tensor::matrix(2, 1, {1, 1}));
  EXPECT_EQ(r.shape(), (Shape{2, 1}));
  EXPECT_EQ(r.values(), (std::vector<double>{3, 7}));
}

TEST(Matmul, MatchesNaiveTripleLoop) {
  const Tensor a = random_matrix(3, 4, 1);
  const Tensor b = random_matrix(4, 2, 2);
  const auto want = testing::naive_matmul(a.data(), b.data(), 3, 4, 2);
  const Tensor got = matmul(a, b);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-14);
}

TEST(Matmul, InnerDimensionMismatch) {
  EXPECT_THROW(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
}

TEST(Kernels, ParallelMatchesSerialBitForBit) {
  const Tensor a = random_matrix(37, 19, 3);
  const Tensor b = random_matrix(19, 23, 4);
  std::vector<double> s(37 * 23), p(37 * 23);
  kernels::matmul_serial(a.data(), b.data(), s, 37, 19, 23);
  kernels::matmul_parallel(a.data(), b.data(), p, 37, 19, 23);
  EXPECT_EQ(s, p);
}

TEST(Elementwise, Identities) {
  const Tensor a = random_matrix(2, 3, 5);
  EXPECT_EQ(add_scalar(a, 0.0).values(), a.values());
  EXPECT_EQ(add(a, Tensor::zeros({2, 3})).values(), a.values());
  EXPECT_EQ(relu(Tensor::row({-1, 0, 2})).values(), (std::vector<double>{0, 0, 2}));
  std::vector<double> xs;
  for (int i = -10; i <= 10; ++i) xs.push_back(i);
  const Tensor x = Tensor::row(xs);
  const Tensor back = log(exp(x));
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(back[i], xs[i], 1e-12);
}

TEST(Elementwise, Errors) {
  EXPECT_THROW(log(Tensor::row({1.0, 0.0})), DomainError);
  EXPECT_THROW(log(Tensor::row({-1.0})), DomainError);
  EXPECT_THROW(add(Tensor::zeros({2, 2}), Tensor::zeros({2, 3})), DimensionError);
  EXPECT_NO_THROW(mul(Tensor::zeros({2, 2}), Tensor::scalar(3.0)));
}

TEST(Softmax, Landmarks) {
  const Tensor u = softmax_row(Tensor::row({0, 0, 0, 0}));
  for (double v : u.data()) EXPECT_EQ(v, 0.25);
  const Tensor big = softmax_row(Tensor::row({1000, 0}));
  EXPECT_EQ(big[0], 1.0);
  EXPECT_GE(big[1], 0.0);
  EXPECT_LT(big[1], 1e-300);
}

TEST(Softmax, ExtendedPrecisionOracle) {
  const std::vector<double> x{1, 2, 3};
  const Tensor got = softmax_row(Tensor::row(x));
  const auto want = testing::big_softmax(x);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(got[i], static_cast<double>(want[i]), 2.5e-16);
}

TEST(Softmax, RowsSumToOneForLargeRandomLogits) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Tensor x = random_matrix(4, 9, seed, seed % 2 == 0 ? 1e3 : 3.0);
    const Tensor p = softmax_row(x);
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 9; ++c) s += p.at(r, c);
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(CrossEntropy, Landmarks) {
  const std::vector<std::size_t> t2{2};
  EXPECT_NEAR(cross_entropy(Tensor::row({0, 0, 0, 0}), t2).item(), std::log(4.0), 1e-12);
  const std::vector<std::size_t> t0{0};
  const double want = testing::big_cross_entropy(std::vector<double>{10, -10}, 0);
  EXPECT_NEAR(want, 2.0611536e-9, 1e-15);
  EXPECT_NEAR(cross_entropy(Tensor::row({10, -10}), t0).item(), want, 1e-24);
}

TEST(CrossEntropy, BatchMeanInvariance) {
  const std::vector<std::size_t> one{1}, two{1, 1};
  const double a = cross_entropy(Tensor::row({0.3, -1.2, 2.0}), one).item();
  const double b = cross_entropy(Tensor::matrix(2, 3, {0.3, -1.2, 2.0, 0.3, -1.2, 2.0}), two).item();
  EXPECT_DOUBLE_EQ(a, b);
}

TEST(CrossEntropy, TargetOutOfRange) {
  const std::vector<std::size_t> t{3};
  EXPECT_THROW(cross_entropy(Tensor::row({1, 2, 3}), t), DimensionError);
}

TEST(Backward, LinearAndQuadratic) {
  Tape tape;
  const Tensor x = tape.leaf(Tensor::matrix(2, 2, {1, -2, 3, 0.5}));
  const Tensor s = sum(x);
  tape.backward(s);
  EXPECT_EQ(tape.grad(x).values(), (std::vector<double>{1, 1, 1, 1}));
  const Tensor q = sum(mul(x, x));
  tape.backward(q);
  EXPECT_EQ(tape.grad(x).values(), (std::vector<double>{2, -4, 6, 1}));
}

TEST(Backward, UntouchedLeafGetsZeros) {
  Tape tape;
  const Tensor x = tape.leaf(Tensor::row({1, 2}));
  const Tensor y = tape.leaf(Tensor::row({3, 4}));
  tape.backward(sum(x));
  EXPECT_EQ(tape.grad(y).values(), (std::vector<double>{0, 0}));
}

TEST(Backward, VisitsEachNodeOnceAndIsRepeatable) {
  Tape tape;
  const Tensor x = tape.leaf(Tensor::row({0.5, -0.25}));
  const Tensor y = mul(x, x);
  const Tensor loss = sum(add(y, y));
  tape.backward(loss);
  const auto first = tape.grad(x).values();
  EXPECT_EQ(tape.backward_visits(), tape.node_count());
  tape.backward(loss);
  EXPECT_EQ(tape.grad(x).values(), first);
}

TEST(Backward, RequiresTrackedScalar) {
  Tape tape;
  EXPECT_THROW(tape.backward(Tensor::scalar(1.0)), std::logic_error);
  const Tensor x = tape.leaf(Tensor::row({1, 2}));
  EXPECT_THROW(tape.backward(x), std::logic_error);
}

TEST(Backward, MatmulGradientsMatchTransposeIdentities) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Tape tape;
    const Tensor a = tape.leaf(random_matrix(3, 3, 2 * seed));
    const Tensor b = tape.leaf(random_matrix(3, 3, 2 * seed + 1));
    tape.backward(sum(matmul(a, b)));
    // d/dA sum(AB) = 1 B^T, d/dB = A^T 1.
    const Tensor ga = tape.grad(a), gb = tape.grad(b);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        double ra = 0.0, rb = 0.0;
        for (std::size_t p = 0; p < 3; ++p) {
          ra += b.at(j, p);
          rb += a.at(p, i);
        }
        EXPECT_NEAR(ga.at(i, j), ra, 1e-14);
        EXPECT_NEAR(gb.at(i, j), rb, 1e-14);
      }
    }
  }
}

TEST(GradCheck, SumOfSquares) {
  const std::vector<Tensor> params{random_matrix(3, 3, 11)};
  const auto r = grad_check([](std::span<const Tensor> p) { return sum(mul(p[0], p[0])); }, params);
  EXPECT_LT(r.max_rel_error, 1e-8);
  EXPECT_EQ(r.checked, 9u);
}

TEST(GradCheck, CrossEntropyOnRandomLogits) {
  const std::vector<std::size_t> targets{0, 3, 2, 1};
  const std::vector<Tensor> params{random_matrix(4, 5, 12, 2.0)};
  const auto r = grad_check([&](std::span<const Tensor> p) { return cross_entropy(p[0], targets); }, params);
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(GradCheck, RejectsBadEpsAndNonFinite) {
  const std::vector<Tensor> params{Tensor::row({1.0})};
  auto f = [](std::span<const Tensor> p) { return sum(p[0]); };
  EXPECT_THROW(grad_check(f, params, 0.0), ConfigError);
  const std::vector<Tensor> tiny{Tensor::row({1e-6})};
  EXPECT_THROW(grad_check([](std::span<const Tensor> p) { return sum(log(p[0])); }, tiny, 1e-5), DomainError);
}

// Random composed graphs over every differentiable op, at most 200 parameters.
TEST(GradCheck, RandomComposedGraphs) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    RngStream rng(seed, RngPurpose::kData, 5);
    const std::size_t b = 2 + static_cast<std::size_t>(rng.uniform_int(0, 3));
    const std::size_t d = 2 + static_cast<std::size_t>(rng.uniform_int(0, 4));
    const std::size_t h = 2 + static_cast<std::size_t>(rng.uniform_int(0, 4));
    std::vector<Tensor> params{random_matrix(b, d, 100 + seed), random_matrix(d, h, 200 + seed, 0.7),
                               random_matrix(1, h, 300 + seed, 0.3), random_matrix(h, 1, 400 + seed, 0.3)};
    std::size_t n = 0;
    for (const auto& p : params) n += p.size();
    ASSERT_LE(n, 200u);
    std::vector<std::size_t> targets(b);
    for (auto& t : targets) t = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(h) - 1));
    const std::vector<std::size_t> picks{0, b - 1, 0};
    const std::vector<std::size_t> ends{1, 3};
    auto f = [&](std::span<const Tensor> p) {
      const Tensor z = add_row_bias(matmul(p[0], p[1]), p[2]);
      const Tensor probs = softmax_row(z);
      const Tensor act = relu(add_scalar(z, 0.1));
      const Tensor g = gather_rows(z, picks);
      const Tensor w = segment_softmax(gather_elements(z, picks, std::vector<std::size_t>{0, 1, 1}), ends);
      const Tensor mixed = scatter_add_rows(scale_rows(g, w), picks, b);
      const Tensor pos = clamp_min(exp(scale(z, 0.5)), 1e-12);
      Tensor loss = add(cross_entropy(z, targets), mean(mul(act, probs)));
      loss = add(loss, scale(sum(log(pos)), 0.01));
      loss = add(loss, mean(matmul(sub(mixed, act), p[3])));
      return add(loss, mean(row_sum(mul(probs, probs))));
    };
    const auto r = grad_check(f, params);
    EXPECT_LT(r.max_rel_error, 1e-5) << "seed " << seed << " param " << r.worst_param << "[" << r.worst_index << "]";
  }
}

TEST(Ops, RerunIsBitIdentical) {
  const Tensor a = random_matrix(5, 4, 21), b = random_matrix(4, 3, 22);
  const std::vector<std::size_t> t{0, 1, 2, 0, 1};
  EXPECT_EQ(cross_entropy(matmul(a, b), t).item(), cross_entropy(matmul(a, b), t).item());
  EXPECT_EQ(softmax_row(a).values(), softmax_row(a).values());
}

}  // namespace
}  // namespace emoe
