// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "emoe/tensor.hpp"

namespace emoe {

// Every op below computes its value eagerly and, when an input is tracked,
// appends a node to that input's tape.

Tensor matmul(const Tensor& a, const Tensor& b);

enum class EwOp { kAdd, kSub, kMul, kScale, kLog, kExp, kRelu };

/// Binary element-wise op. `b` must match `a` exactly or be a one-element
/// tensor (scalar broadcast).
Tensor ew(EwOp op, const Tensor& a, const Tensor& b);
/// Scalar-right-hand form (kAdd, kSub, kMul and kScale accept it).
Tensor ew(EwOp op, const Tensor& a, double b);
/// Unary form (kLog, kExp, kRelu).
Tensor ew(EwOp op, const Tensor& a);

inline Tensor add(const Tensor& a, const Tensor& b) { return ew(EwOp::kAdd, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return ew(EwOp::kSub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return ew(EwOp::kMul, a, b); }
inline Tensor scale(const Tensor& a, double s) { return ew(EwOp::kScale, a, s); }
inline Tensor add_scalar(const Tensor& a, double s) { return ew(EwOp::kAdd, a, s); }
inline Tensor log(const Tensor& a) { return ew(EwOp::kLog, a); }
inline Tensor exp(const Tensor& a) { return ew(EwOp::kExp, a); }
inline Tensor relu(const Tensor& a) { return ew(EwOp::kRelu, a); }

/// max(a, floor); gradient passes only where a > floor.
Tensor clamp_min(const Tensor& a, double floor);

/// [B x n] + bias[n] (or [1 x n]) added to every row.
Tensor add_row_bias(const Tensor& a, const Tensor& bias);

Tensor sum(const Tensor& a);   // -> scalar
Tensor mean(const Tensor& a);  // -> scalar
/// Per-row sum of a 2-D tensor -> [B x 1].
Tensor row_sum(const Tensor& a);

/// Softmax over the last dimension with max-subtraction.
Tensor softmax_row(const Tensor& x);

/// Mean over rows of -log softmax(logits)[target].
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets);
/// -log softmax(row)[target] as (max - row[target]) + log1p(sum of the other
/// exp terms), which keeps full relative precision near zero loss.
double row_cross_entropy(std::span<const double> row, std::size_t target);

/// Rows `index[i]` of a 2-D tensor stacked into [index.size() x cols].
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index);

/// [n_rows x cols] zeros with src row i added into row index[i].
Tensor scatter_add_rows(const Tensor& src, std::span<const std::size_t> index, std::size_t n_rows);

/// Element (row[i], col[i]) of a 2-D tensor for every i -> [n x 1].
Tensor gather_elements(const Tensor& a, std::span<const std::size_t> row,
                       std::span<const std::size_t> col);

/// Softmax of a column vector [n x 1] computed independently within each
/// contiguous segment; `segment_ends[s]` is one past the last row of segment s.
Tensor segment_softmax(const Tensor& x, std::span<const std::size_t> segment_ends);

/// Multiplies row i of a [n x d] tensor by w[i] where w is [n x 1].
Tensor scale_rows(const Tensor& a, const Tensor& w);

/// Plain (untracked) helpers shared by reference paths and tests.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace emoe
