// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "emoe/moe.hpp"
#include "emoe/tensor.hpp"

namespace emoe {

inline constexpr double kDefaultLambda = 5e-4;
inline constexpr double kDefaultLbCoeff = 0.01;

struct LossBundle {
  double ce = 0.0;
  double lb = 0.0;
  double hr = 0.0;
  double total = 0.0;
  double lambda = kDefaultLambda;
  double lb_coeff = kDefaultLbCoeff;
};

/// Hierarchical router loss: mean over rows of -sum_i h_i log(h_i N), i.e.
/// the negated KL divergence from each router distribution to uniform.
/// Rows must be normalized (to 1e-8) and non-negative. Lies in [-log N, 0].
Tensor hr_loss(const Tensor& probs);

/// dL/dh_i of the per-row loss before the softmax chain rule: -log(h_i N) - 1.
std::vector<double> hr_grad_unconstrained(std::span<const double> probs);

/// Gradient of the forward-KL alternative, 1 / (N h_i). Comparison only.
std::vector<double> forward_kl_grad(std::span<const double> probs);

/// Frequency x probability balance loss: coeff * N * sum_i f_i P_i where
/// f_i is the share of (token, expert) assignments landing on expert i and
/// P_i is the mean router probability of expert i. Only the first N router
/// columns (real experts) take part.
double load_balance_loss(std::span<const RoutingRecord> records, std::size_t n_experts,
                         double lb_coeff = kDefaultLbCoeff);

/// Same loss with P_i taken from a (possibly tracked) [B x width] router
/// probability tensor so it can be differentiated.
Tensor load_balance_loss(const Tensor& probs, std::span<const RoutingRecord> records, std::size_t n_experts,
                         double lb_coeff = kDefaultLbCoeff);

/// ce + lb + lambda * hr.
LossBundle total_loss(double ce, double lb, double hr, double lambda, double lb_coeff = kDefaultLbCoeff);
Tensor total_loss(const Tensor& ce, const Tensor& lb, const Tensor& hr, double lambda);

}  // namespace emoe
