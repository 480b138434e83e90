// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "emoe/tensor.hpp"

namespace emoe {

/// Scalar objective of a parameter list. Called with tape-tracked parameters
/// for the analytic pass and with plain tensors for the finite differences,
/// so it must be deterministic and must not hold state between calls.
using ScalarObjective = std::function<Tensor(std::span<const Tensor> params)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

/// Compares tape gradients against central differences
/// (f(p + eps) - f(p - eps)) / (2 eps), element by element. The relative
/// error of one element is |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check(const ScalarObjective& f, std::span<const Tensor> params, double eps = 1e-5);

}  // namespace emoe
