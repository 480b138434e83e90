// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/moe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "emoe/errors.hpp"
#include "emoe/ops.hpp"
#include "emoe/rng.hpp"

namespace emoe {

namespace {

Tensor gaussian(std::size_t rows, std::size_t cols, double stddev, RngStream& rng) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = stddev * rng.normal();
  return Tensor::matrix(rows, cols, std::move(v));
}

}  // namespace

MoeLayer::MoeLayer(Tensor router, std::vector<Expert> experts)
    : router_(std::move(router)), experts_(std::move(experts)) {
  if (experts_.size() < 2) throw ConfigError("MoeLayer needs at least two experts");
  if (router_.rank() != 2 || router_.cols() < experts_.size()) {
    throw DimensionError("router must be [d x width] with width >= number of experts");
  }
  const std::size_t d = router_.rows();
  const Shape w1 = experts_.front().w1.shape();
  if (w1.size() != 2 || w1[0] != d || w1[1] < 1) throw DimensionError("expert W1 must be [d x d_h]");
  const std::size_t h = w1[1];
  for (const Expert& e : experts_) {
    if (e.w1.shape() != Shape{d, h} || e.b1.size() != h || e.w2.shape() != Shape{h, d} || e.b2.size() != d) {
      throw DimensionError("experts must share identical shapes");
    }
  }
}

MoeLayer MoeLayer::random(std::size_t d, std::size_t d_hidden, std::size_t n_experts, RngStream& rng,
                          std::size_t router_width) {
  if (router_width == 0) router_width = n_experts;
  Tensor router = gaussian(d, router_width, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  std::vector<Expert> experts;
  experts.reserve(n_experts);
  for (std::size_t i = 0; i < n_experts; ++i) {
    Expert e;
    e.w1 = gaussian(d, d_hidden, std::sqrt(2.0 / static_cast<double>(d)), rng);
    e.b1 = Tensor::zeros({1, d_hidden});
    e.w2 = gaussian(d_hidden, d, 1.0 / std::sqrt(static_cast<double>(d_hidden)), rng);
    e.b2 = Tensor::zeros({1, d});
    experts.push_back(std::move(e));
  }
  return MoeLayer(std::move(router), std::move(experts));
}

std::uint64_t InvocationCounter::total() const {
  return std::accumulate(per_expert.begin(), per_expert.end(), std::uint64_t{0});
}

void InvocationCounter::add(std::size_t expert, std::uint64_t n) {
  if (per_expert.size() <= expert) per_expert.resize(expert + 1, 0);
  per_expert[expert] += n;
}

Tensor router_logits(const Tensor& x, const MoeLayer& layer) {
  if (x.rank() != 2 || x.cols() != layer.dim()) {
    throw DimensionError("router_logits: input " + shape_string(x.shape()) + " vs model width " +
                         std::to_string(layer.dim()));
  }
  return matmul(x, layer.router());
}

std::vector<std::size_t> top_k_select(std::span<const double> logits, std::size_t k) {
  if (k < 1 || k > logits.size()) {
    throw ConfigError("top_k_select: k=" + std::to_string(k) + " outside [1, " + std::to_string(logits.size()) + "]");
  }
  std::vector<std::size_t> order(logits.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (logits[a] != logits[b]) return logits[a] > logits[b];
                      return a < b;
                    });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

Tensor expert_forward(const Tensor& x, const Expert& expert) {
  const Tensor hidden = relu(add_row_bias(matmul(x, expert.w1), expert.b1));
  return add_row_bias(matmul(hidden, expert.w2), expert.b2);
}

GateResult gate_and_combine(const Tensor& x, std::span<const std::size_t> selected,
                            std::span<const double> logits, const MoeLayer& layer,
                            InvocationCounter* counter) {
  if (selected.empty()) throw ConfigError("gate_and_combine: empty selection");
  if (logits.size() != layer.router_width()) throw DimensionError("gate_and_combine: logits width mismatch");
  const std::size_t d = layer.dim();
  if (x.size() != d) throw DimensionError("gate_and_combine: token width mismatch");
  const Tensor row = Tensor::matrix(1, d, x.values());

  std::vector<double> chosen;
  chosen.reserve(selected.size());
  for (std::size_t i : selected) {
    if (i >= layer.n_experts()) throw DimensionError("gate_and_combine: expert index out of range");
    chosen.push_back(logits[i]);
  }
  GateResult out{Tensor::zeros({1, d}), softmax(chosen)};
  for (std::size_t s = 0; s < selected.size(); ++s) {
    const Tensor e = expert_forward(row, layer.expert(selected[s]));
    if (counter) counter->add(selected[s]);
    out.y = add(out.y, scale_rows(e, Tensor::scalar(out.weights[s])));
  }
  return out;
}

Tensor ideal_forward(const Tensor& x, std::size_t k_ideal, const MoeLayer& layer, InvocationCounter* counter) {
  const Tensor row = Tensor::matrix(1, layer.dim(), x.values());
  const Tensor logits = router_logits(row, layer);
  const auto pool = top_k_select(logits.data(), k_ideal);
  return gate_and_combine(row, pool, logits.data(), layer, counter).y;
}

}  // namespace emoe
