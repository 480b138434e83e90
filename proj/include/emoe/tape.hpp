// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "emoe/tensor.hpp"

namespace emoe {

/// Gradient buffers handed to a node's backward rule, one per input. An
/// input that does not participate in the tape gets an empty span.
using GradInputs = std::vector<std::span<double>>;
using BackwardRule = std::function<void(std::span<const double> grad_out, GradInputs& grad_in)>;

/// Append-only record of tracked operations.
///
/// Nodes are appended in evaluation order, so the node sequence is already
/// topologically sorted and backward() is a single reverse sweep. A tape is
/// single-threaded; independent tapes may live on different threads.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers `value` as a differentiable leaf and returns its tracked handle.
  Tensor leaf(const Tensor& value);

  /// Appends an op node. `inputs` may contain untracked tensors; they are
  /// treated as constants. Returns `value` bound to the new node, or `value`
  /// unchanged when no input is tracked.
  Tensor record(Tensor value, std::span<const Tensor* const> inputs, BackwardRule rule);

  /// Reverse sweep from a tracked scalar. Gradients of every node are reset
  /// first, so calling backward twice gives the same result.
  void backward(const Tensor& loss);

  /// Gradient of the loss w.r.t. a tracked tensor (zeros if unreached).
  Tensor grad(const Tensor& tracked) const;

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t backward_visits() const noexcept { return last_visits_; }

 private:
  struct Node {
    std::vector<std::size_t> inputs;  // node ids; npos for constants
    BackwardRule rule;                // empty for leaves
    Shape shape;
  };
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  std::size_t last_visits_ = 0;
};

/// Records a node for `value` if any of `inputs` is tracked, on the inputs'
/// tape. All tracked inputs must share one tape.
Tensor track(Tensor value, std::initializer_list<const Tensor*> inputs, BackwardRule rule);

}  // namespace emoe
