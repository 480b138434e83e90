// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "emoe/tensor.hpp"

namespace emoe {

class RngStream;

/// Two-layer relu perceptron: relu(x W1 + b1) W2 + b2.
struct Expert {
  Tensor w1;  // [d x d_h]
  Tensor b1;  // [1 x d_h]
  Tensor w2;  // [d_h x d]
  Tensor b2;  // [1 x d]
};

/// Router matrix plus N experts of identical shape.
///
/// The router may carry extra columns beyond the real experts; those are
/// the zero-output "null" slots used by AdaMoE-style routing.
class MoeLayer {
 public:
  MoeLayer(Tensor router, std::vector<Expert> experts);

  /// Fan-in scaled Gaussian initialisation. `router_width` defaults to N.
  static MoeLayer random(std::size_t d, std::size_t d_hidden, std::size_t n_experts, RngStream& rng,
                         std::size_t router_width = 0);

  std::size_t n_experts() const noexcept { return experts_.size(); }
  std::size_t router_width() const { return router_.cols(); }
  std::size_t dim() const { return router_.rows(); }
  std::size_t hidden() const { return experts_.front().w1.cols(); }

  const Tensor& router() const noexcept { return router_; }
  const Expert& expert(std::size_t i) const { return experts_.at(i); }
  Tensor& router() noexcept { return router_; }
  Expert& expert(std::size_t i) { return experts_.at(i); }

 private:
  Tensor router_;
  std::vector<Expert> experts_;
};

/// Routing outcome for one token in one MoE block.
struct RoutingRecord {
  std::size_t token_index = 0;
  std::size_t layer = 0;
  std::vector<std::size_t> pool;          // candidate pool, ascending
  std::vector<std::size_t> selected;      // real experts evaluated, ascending
  std::vector<double> gate_weights;       // aligned with `selected`
  std::vector<double> full_probs;         // softmax over every router column
  std::size_t null_selected = 0;          // AdaMoE null slots chosen
  double null_weight = 0.0;               // gate mass absorbed by null slots
};

/// Per-expert invocation tally; one increment per token an expert processes.
struct InvocationCounter {
  std::vector<std::uint64_t> per_expert;
  std::uint64_t total() const;
  void add(std::size_t expert, std::uint64_t n = 1);
};

/// Router projection h(x) = x W_g for a batch [B x d] -> [B x width].
Tensor router_logits(const Tensor& x, const MoeLayer& layer);

/// The k largest logits, ties to the lower index, returned ascending.
std::vector<std::size_t> top_k_select(std::span<const double> logits, std::size_t k);

/// E_i(x) for a batch of rows [R x d].
Tensor expert_forward(const Tensor& x, const Expert& expert);

struct GateResult {
  Tensor y;                     // [1 x d]
  std::vector<double> weights;  // aligned with the selection
};

/// Softmax of the selected logits, then y = sum_i w_i E_i(x) accumulated in
/// ascending expert order. Only the selected experts run.
GateResult gate_and_combine(const Tensor& x, std::span<const std::size_t> selected,
                            std::span<const double> logits, const MoeLayer& layer,
                            InvocationCounter* counter = nullptr);

/// Dense-pool reference: gate_and_combine over the top k_ideal experts.
Tensor ideal_forward(const Tensor& x, std::size_t k_ideal, const MoeLayer& layer,
                     InvocationCounter* counter = nullptr);

}  // namespace emoe
