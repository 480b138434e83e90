// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/losses.hpp"

#include <cmath>
#include <string>

#include "emoe/errors.hpp"
#include "emoe/ops.hpp"

namespace emoe {

namespace {

constexpr double kProbFloor = 1e-30;

void require_distribution_rows(const Tensor& probs, const char* where) {
  if (probs.rank() != 2) throw DimensionError(std::string(where) + ": expected [B x N] probabilities");
  const std::size_t n = probs.cols();
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double v = probs.at(r, c);
      if (v < 0.0) throw DomainError(std::string(where) + ": negative probability");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-8) {
      throw DomainError(std::string(where) + ": row " + std::to_string(r) + " sums to " + std::to_string(total));
    }
  }
}

std::vector<double> positive_probs(std::span<const double> probs, const char* where) {
  if (probs.empty()) throw DimensionError(std::string(where) + ": empty distribution");
  for (double v : probs) {
    if (!(v > 0.0)) throw DomainError(std::string(where) + ": probabilities must be strictly positive");
  }
  return {probs.begin(), probs.end()};
}

}  // namespace

Tensor hr_loss(const Tensor& probs) {
  require_distribution_rows(probs, "hr_loss");
  const auto n = static_cast<double>(probs.cols());
  const auto rows = static_cast<double>(probs.rows());
  // h * log(max(h N, floor)): entries at zero contribute exactly zero.
  const Tensor scaled = clamp_min(scale(probs, n), kProbFloor * n);
  const Tensor terms = mul(probs, log(scaled));
  return scale(sum(terms), -1.0 / rows);
}

std::vector<double> hr_grad_unconstrained(std::span<const double> probs) {
  std::vector<double> g = positive_probs(probs, "hr_grad_unconstrained");
  const auto n = static_cast<double>(g.size());
  for (double& v : g) v = -std::log(v * n) - 1.0;
  return g;
}

std::vector<double> forward_kl_grad(std::span<const double> probs) {
  std::vector<double> g = positive_probs(probs, "forward_kl_grad");
  const auto n = static_cast<double>(g.size());
  for (double& v : g) v = 1.0 / (n * v);
  return g;
}

Tensor load_balance_loss(const Tensor& probs, std::span<const RoutingRecord> records, std::size_t n_experts,
                         double lb_coeff) {
  if (records.empty()) throw ConfigError("load_balance_loss: no routing records");
  if (probs.rank() != 2 || probs.rows() != records.size() || probs.cols() < n_experts) {
    throw DimensionError("load_balance_loss: probabilities do not match records");
  }
  const std::size_t width = probs.cols();
  std::vector<double> counts(width, 0.0);
  double assignments = 0.0;
  for (const auto& r : records) {
    for (std::size_t e : r.selected) {
      if (e >= n_experts) throw DimensionError("load_balance_loss: expert index out of range");
      counts[e] += 1.0;
      assignments += 1.0;
    }
  }
  std::vector<double> f(width, 0.0);
  if (assignments > 0.0) {
    for (std::size_t e = 0; e < n_experts; ++e) f[e] = counts[e] / assignments;
  }
  const auto batch = static_cast<double>(records.size());
  const Tensor mean_probs = matmul(Tensor::filled({1, records.size()}, 1.0 / batch), probs);
  const Tensor dot = matmul(mean_probs, Tensor::matrix(width, 1, std::move(f)));
  return scale(dot, lb_coeff * static_cast<double>(n_experts));
}

double load_balance_loss(std::span<const RoutingRecord> records, std::size_t n_experts, double lb_coeff) {
  if (records.empty()) throw ConfigError("load_balance_loss: no routing records");
  const std::size_t width = records.front().full_probs.size();
  std::vector<double> probs;
  probs.reserve(records.size() * width);
  for (const auto& r : records) {
    if (r.full_probs.size() != width) throw DimensionError("load_balance_loss: ragged router probabilities");
    probs.insert(probs.end(), r.full_probs.begin(), r.full_probs.end());
  }
  return load_balance_loss(Tensor::matrix(records.size(), width, std::move(probs)), records, n_experts, lb_coeff)
      .item();
}

LossBundle total_loss(double ce, double lb, double hr, double lambda, double lb_coeff) {
  for (double v : {ce, lb, hr, lambda, lb_coeff}) {
    if (!std::isfinite(v)) throw DomainError("total_loss: non-finite input");
  }
  LossBundle b;
  b.ce = ce;
  b.lb = lb;
  b.hr = hr;
  b.lambda = lambda;
  b.lb_coeff = lb_coeff;
  b.total = ce + lb + lambda * hr;
  return b;
}

Tensor total_loss(const Tensor& ce, const Tensor& lb, const Tensor& hr, double lambda) {
  if (!std::isfinite(lambda)) throw DomainError("total_loss: non-finite lambda");
  return add(add(ce, lb), scale(hr, lambda));
}

}  // namespace emoe
