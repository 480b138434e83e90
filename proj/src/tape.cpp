// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/tape.hpp"

#include <algorithm>
#include <stdexcept>

#include "emoe/errors.hpp"

namespace emoe {

Tensor Tape::leaf(const Tensor& value) {
  Tensor t = value.detached();
  t.tape_ = this;
  t.node_ = nodes_.size();
  nodes_.push_back(Node{{}, {}, t.shape()});
  return t;
}

Tensor Tape::record(Tensor value, std::span<const Tensor* const> inputs, BackwardRule rule) {
  Node node;
  node.shape = value.shape();
  node.inputs.reserve(inputs.size());
  for (const Tensor* in : inputs) {
    if (in->tape_ == nullptr) {
      node.inputs.push_back(npos);
    } else {
      if (in->tape_ != this) throw std::logic_error("operands belong to different tapes");
      node.inputs.push_back(in->node_);
    }
  }
  node.rule = std::move(rule);
  value.tape_ = this;
  value.node_ = nodes_.size();
  nodes_.push_back(std::move(node));
  return value;
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape_ != this) throw std::logic_error("backward() on a tensor not tracked by this tape");
  if (loss.size() != 1) throw DimensionError("backward() needs a scalar loss, got " + shape_string(loss.shape()));

  grads_.assign(nodes_.size(), {});
  for (std::size_t i = 0; i <= loss.node_; ++i) grads_[i].assign(shape_size(nodes_[i].shape), 0.0);
  grads_[loss.node_][0] = 1.0;

  last_visits_ = 0;
  GradInputs gin;
  for (std::size_t i = loss.node_ + 1; i-- > 0;) {
    ++last_visits_;
    const Node& node = nodes_[i];
    if (!node.rule) continue;
    gin.clear();
    for (std::size_t in : node.inputs) {
      if (in == npos) gin.emplace_back();
      else gin.emplace_back(grads_[in]);
    }
    node.rule(grads_[i], gin);
  }
}

Tensor Tape::grad(const Tensor& tracked) const {
  if (tracked.tape_ != this) throw std::logic_error("grad() of a tensor not tracked by this tape");
  const Shape& shape = nodes_[tracked.node_].shape;
  if (tracked.node_ >= grads_.size() || grads_[tracked.node_].empty()) return Tensor::zeros(shape);
  return Tensor(shape, grads_[tracked.node_]);
}

Tensor track(Tensor value, std::initializer_list<const Tensor*> inputs, BackwardRule rule) {
  Tape* tape = nullptr;
  for (const Tensor* in : inputs) {
    if (in->tracked()) {
      if (tape && tape != in->tape()) throw std::logic_error("operands belong to different tapes");
      tape = in->tape();
    }
  }
  if (!tape) return value;
  return tape->record(std::move(value), std::span<const Tensor* const>(inputs.begin(), inputs.size()),
                      std::move(rule));
}

}  // namespace emoe
