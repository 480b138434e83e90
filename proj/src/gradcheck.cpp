// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "emoe/errors.hpp"
#include "emoe/tape.hpp"

namespace emoe {

namespace {

double evaluate(const ScalarObjective& f, std::span<const Tensor> params) {
  const Tensor out = f(params);
  const double v = out.item();
  if (!std::isfinite(v)) throw DomainError("grad_check: objective is not finite");
  return v;
}

}  // namespace

GradCheckResult grad_check(const ScalarObjective& f, std::span<const Tensor> params, double eps) {
  if (!(eps > 0.0)) throw ConfigError("grad_check: eps must be positive");

  std::vector<Tensor> grads;
  {
    Tape tape;
    std::vector<Tensor> tracked;
    tracked.reserve(params.size());
    for (const Tensor& p : params) tracked.push_back(tape.leaf(p));
    const Tensor loss = f(tracked);
    if (!loss.tracked()) throw std::logic_error("grad_check: objective does not depend on the parameters");
    require_finite(loss.data(), "grad_check");
    tape.backward(loss);
    for (const Tensor& t : tracked) grads.push_back(tape.grad(t));
  }

  GradCheckResult result;
  std::vector<Tensor> probe(params.begin(), params.end());
  for (auto& p : probe) p = p.detached();
  for (std::size_t pi = 0; pi < probe.size(); ++pi) {
    for (std::size_t i = 0; i < probe[pi].size(); ++i) {
      const double original = probe[pi][i];
      probe[pi].mutable_data()[i] = original + eps;
      const double up = evaluate(f, probe);
      probe[pi].mutable_data()[i] = original - eps;
      const double down = evaluate(f, probe);
      probe[pi].mutable_data()[i] = original;

      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = grads[pi][i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.checked;
      if (rel > result.max_rel_error || result.checked == 1) {
        result.max_rel_error = rel;
        result.worst_param = pi;
        result.worst_index = i;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace emoe
