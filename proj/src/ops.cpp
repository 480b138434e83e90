// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emoe/errors.hpp"
#include "emoe/kernels.hpp"
#include "emoe/tape.hpp"

namespace emoe {

namespace {

void require_2d(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(std::string(op) + ": expected 2-D tensor, got " + shape_string(t.shape()));
}

// Shared by softmax_row, segment_softmax and the plain softmax helper so that
// every path produces identical bits for identical inputs.
void softmax_into(const double* in, double* out, std::size_t n) {
  double mx = in[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, in[i]);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - mx);
    total += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= total;
}

void softmax_backward(const double* y, const double* g, double* gx, std::size_t n) {
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += g[i] * y[i];
  for (std::size_t i = 0; i < n; ++i) gx[i] += y[i] * (g[i] - dot);
}

Tensor make(Shape shape, std::vector<double> data, const char* op) {
  require_finite(data, op);
  return Tensor(std::move(shape), std::move(data));
}

const char* ew_name(EwOp op) {
  switch (op) {
    case EwOp::kAdd: return "add";
    case EwOp::kSub: return "sub";
    case EwOp::kMul: return "mul";
    case EwOp::kScale: return "scale";
    case EwOp::kLog: return "log";
    case EwOp::kExp: return "exp";
    case EwOp::kRelu: return "relu";
  }
  return "ew";
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw DimensionError("softmax of empty input");
  require_finite(logits, "softmax");
  std::vector<double> out(logits.size());
  softmax_into(logits.data(), out.data(), logits.size());
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions disagree " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  std::vector<double> c(m * n);
  kernels::matmul_serial(a.data(), b.data(), c, m, k, n);
  Tensor out = make({m, n}, std::move(c), "matmul");
  if (!a.tracked() && !b.tracked()) return out;
  return track(std::move(out), {&a, &b},
               [av = a.values(), bv = b.values(), m, k, n](std::span<const double> g, GradInputs& gin) {
                 if (!gin[0].empty()) {
                   std::vector<double> ga(m * k);
                   kernels::matmul_bt_serial(g, bv, ga, m, n, k);
                   for (std::size_t i = 0; i < ga.size(); ++i) gin[0][i] += ga[i];
                 }
                 if (!gin[1].empty()) kernels::matmul_at_accumulate_serial(av, g, gin[1], m, k, n);
               });
}

Tensor ew(EwOp op, const Tensor& a, const Tensor& b) {
  const bool scalar_b = b.size() == 1;
  if (!scalar_b && a.shape() != b.shape()) {
    throw DimensionError(std::string(ew_name(op)) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " are not broadcastable");
  }
  if (op == EwOp::kScale && b.size() != 1) throw DimensionError("scale: factor must be a scalar");
  const std::size_t n = a.size();
  auto bat = [&](std::size_t i) { return scalar_b ? b[0] : b[i]; };
  std::vector<double> out(n);
  switch (op) {
    case EwOp::kAdd: for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + bat(i); break;
    case EwOp::kSub: for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - bat(i); break;
    case EwOp::kMul:
    case EwOp::kScale: for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * bat(i); break;
    default: throw std::invalid_argument(std::string(ew_name(op)) + " is not a binary op");
  }
  Tensor result = make(a.shape(), std::move(out), ew_name(op));
  if (!a.tracked() && !b.tracked()) return result;
  return track(std::move(result), {&a, &b},
               [op, scalar_b, av = a.values(), bv = b.values()](std::span<const double> g, GradInputs& gin) {
                 const std::size_t n = g.size();
                 auto bat = [&](std::size_t i) { return scalar_b ? bv[0] : bv[i]; };
                 auto add_b = [&](std::size_t i, double v) {
                   if (scalar_b) gin[1][0] += v;
                   else gin[1][i] += v;
                 };
                 const bool ga = !gin[0].empty(), gb = !gin[1].empty();
                 for (std::size_t i = 0; i < n; ++i) {
                   switch (op) {
                     case EwOp::kAdd:
                       if (ga) gin[0][i] += g[i];
                       if (gb) add_b(i, g[i]);
                       break;
                     case EwOp::kSub:
                       if (ga) gin[0][i] += g[i];
                       if (gb) add_b(i, -g[i]);
                       break;
                     default:
                       if (ga) gin[0][i] += g[i] * bat(i);
                       if (gb) add_b(i, g[i] * av[i]);
                       break;
                   }
                 }
               });
}

Tensor ew(EwOp op, const Tensor& a, double b) { return ew(op, a, Tensor::scalar(b)); }

Tensor ew(EwOp op, const Tensor& a) {
  const std::size_t n = a.size();
  std::vector<double> out(n);
  switch (op) {
    case EwOp::kLog:
      for (std::size_t i = 0; i < n; ++i) {
        if (!(a[i] > 0.0)) throw DomainError("log: argument " + std::to_string(a[i]) + " is not positive");
        out[i] = std::log(a[i]);
      }
      break;
    case EwOp::kExp: for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a[i]); break;
    case EwOp::kRelu: for (std::size_t i = 0; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0; break;
    default: throw std::invalid_argument(std::string(ew_name(op)) + " is not a unary op");
  }
  Tensor result = make(a.shape(), out, ew_name(op));
  if (!a.tracked()) return result;
  return track(std::move(result), {&a},
               [op, av = a.values(), yv = std::move(out)](std::span<const double> g, GradInputs& gin) {
                 for (std::size_t i = 0; i < g.size(); ++i) {
                   switch (op) {
                     case EwOp::kLog: gin[0][i] += g[i] / av[i]; break;
                     case EwOp::kExp: gin[0][i] += g[i] * yv[i]; break;
                     default: if (av[i] > 0.0) gin[0][i] += g[i]; break;
                   }
                 }
               });
}

Tensor clamp_min(const Tensor& a, double floor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::max(a[i], floor);
  Tensor result = make(a.shape(), std::move(out), "clamp_min");
  if (!a.tracked()) return result;
  return track(std::move(result), {&a}, [av = a.values(), floor](std::span<const double> g, GradInputs& gin) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (av[i] > floor) gin[0][i] += g[i];
    }
  });
}

Tensor add_row_bias(const Tensor& a, const Tensor& bias) {
  require_2d(a, "add_row_bias");
  const std::size_t rows = a.rows(), cols = a.cols();
  if (bias.size() != cols) {
    throw DimensionError("add_row_bias: bias " + shape_string(bias.shape()) + " vs rows of width " +
                         std::to_string(cols));
  }
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = a[r * cols + c] + bias[c];
  }
  Tensor result = make(a.shape(), std::move(out), "add_row_bias");
  if (!a.tracked() && !bias.tracked()) return result;
  return track(std::move(result), {&a, &bias}, [rows, cols](std::span<const double> g, GradInputs& gin) {
    if (!gin[0].empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i];
    }
    if (!gin[1].empty()) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) gin[1][c] += g[r * cols + c];
      }
    }
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  Tensor result = make({1}, {total}, "sum");
  if (!a.tracked()) return result;
  return track(std::move(result), {&a}, [](std::span<const double> g, GradInputs& gin) {
    for (double& v : gin[0]) v += g[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor row_sum(const Tensor& a) {
  require_2d(a, "row_sum");
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r] += a[r * cols + c];
  }
  Tensor result = make({rows, 1}, std::move(out), "row_sum");
  if (!a.tracked()) return result;
  return track(std::move(result), {&a}, [cols](std::span<const double> g, GradInputs& gin) {
    for (std::size_t i = 0; i < gin[0].size(); ++i) gin[0][i] += g[i / cols];
  });
}

Tensor softmax_row(const Tensor& x) {
  if (x.rank() == 0) throw DimensionError("softmax_row of rank-0 tensor");
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.size() / n;
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) softmax_into(x.data().data() + r * n, out.data() + r * n, n);
  Tensor result = make(x.shape(), out, "softmax_row");
  if (!x.tracked()) return result;
  return track(std::move(result), {&x}, [y = std::move(out), n, rows](std::span<const double> g, GradInputs& gin) {
    for (std::size_t r = 0; r < rows; ++r) softmax_backward(y.data() + r * n, g.data() + r * n, gin[0].data() + r * n, n);
  });
}

double row_cross_entropy(std::span<const double> row, std::size_t target) {
  if (row.empty() || target >= row.size()) throw DimensionError("row_cross_entropy: target out of range");
  const std::size_t top = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  double rest = 0.0;
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (c != top) rest += std::exp(row[c] - row[top]);
  }
  return (row[top] - row[target]) + std::log1p(rest);
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets) {
  require_2d(logits, "cross_entropy");
  const std::size_t rows = logits.rows(), classes = logits.cols();
  if (targets.size() != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(rows) + " rows");
  }
  std::vector<double> probs(logits.size());
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] >= classes) {
      throw DimensionError("cross_entropy: target " + std::to_string(targets[r]) + " outside [0, " +
                           std::to_string(classes) + ")");
    }
    const std::span<const double> row = logits.data().subspan(r * classes, classes);
    total += row_cross_entropy(row, targets[r]);
    softmax_into(row.data(), probs.data() + r * classes, classes);
  }
  Tensor result = make({1}, {total / static_cast<double>(rows)}, "cross_entropy");
  if (!logits.tracked()) return result;
  std::vector<std::size_t> t(targets.begin(), targets.end());
  return track(std::move(result), {&logits},
               [p = std::move(probs), t = std::move(t), rows, classes](std::span<const double> g, GradInputs& gin) {
                 const double s = g[0] / static_cast<double>(rows);
                 for (std::size_t r = 0; r < rows; ++r) {
                   for (std::size_t c = 0; c < classes; ++c) {
                     const double onehot = c == t[r] ? 1.0 : 0.0;
                     gin[0][r * classes + c] += s * (p[r * classes + c] - onehot);
                   }
                 }
               });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index) {
  require_2d(a, "gather_rows");
  if (index.empty()) throw DimensionError("gather_rows: empty index");
  const std::size_t cols = a.cols();
  std::vector<double> out(index.size() * cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= a.rows()) throw DimensionError("gather_rows: row index out of range");
    std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(index[i] * cols), cols, out.begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  Tensor result(Shape{index.size(), cols}, std::move(out));
  if (!a.tracked()) return result;
  std::vector<std::size_t> idx(index.begin(), index.end());
  return track(std::move(result), {&a}, [idx = std::move(idx), cols](std::span<const double> g, GradInputs& gin) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t c = 0; c < cols; ++c) gin[0][idx[i] * cols + c] += g[i * cols + c];
    }
  });
}

Tensor scatter_add_rows(const Tensor& src, std::span<const std::size_t> index, std::size_t n_rows) {
  require_2d(src, "scatter_add_rows");
  if (index.size() != src.rows()) throw DimensionError("scatter_add_rows: index length differs from source rows");
  const std::size_t cols = src.cols();
  std::vector<double> out(n_rows * cols, 0.0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= n_rows) throw DimensionError("scatter_add_rows: row index out of range");
    for (std::size_t c = 0; c < cols; ++c) out[index[i] * cols + c] += src[i * cols + c];
  }
  Tensor result = make({n_rows, cols}, std::move(out), "scatter_add_rows");
  if (!src.tracked()) return result;
  std::vector<std::size_t> idx(index.begin(), index.end());
  return track(std::move(result), {&src}, [idx = std::move(idx), cols](std::span<const double> g, GradInputs& gin) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t c = 0; c < cols; ++c) gin[0][i * cols + c] += g[idx[i] * cols + c];
    }
  });
}

Tensor gather_elements(const Tensor& a, std::span<const std::size_t> row, std::span<const std::size_t> col) {
  require_2d(a, "gather_elements");
  if (row.size() != col.size() || row.empty()) throw DimensionError("gather_elements: bad index lists");
  const std::size_t cols = a.cols();
  std::vector<std::size_t> flat(row.size());
  std::vector<double> out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] >= a.rows() || col[i] >= cols) throw DimensionError("gather_elements: index out of range");
    flat[i] = row[i] * cols + col[i];
    out[i] = a[flat[i]];
  }
  Tensor result(Shape{row.size(), 1}, std::move(out));
  if (!a.tracked()) return result;
  return track(std::move(result), {&a}, [flat = std::move(flat)](std::span<const double> g, GradInputs& gin) {
    for (std::size_t i = 0; i < flat.size(); ++i) gin[0][flat[i]] += g[i];
  });
}

Tensor segment_softmax(const Tensor& x, std::span<const std::size_t> segment_ends) {
  const std::size_t n = x.size();
  if (segment_ends.empty() || segment_ends.back() != n) {
    throw DimensionError("segment_softmax: segments must cover the input exactly");
  }
  std::vector<double> out(n);
  std::size_t begin = 0;
  for (std::size_t end : segment_ends) {
    if (end <= begin) throw DimensionError("segment_softmax: empty or unordered segment");
    softmax_into(x.data().data() + begin, out.data() + begin, end - begin);
    begin = end;
  }
  Tensor result = make(x.shape(), out, "segment_softmax");
  if (!x.tracked()) return result;
  std::vector<std::size_t> ends(segment_ends.begin(), segment_ends.end());
  return track(std::move(result), {&x},
               [y = std::move(out), ends = std::move(ends)](std::span<const double> g, GradInputs& gin) {
                 std::size_t b = 0;
                 for (std::size_t e : ends) {
                   softmax_backward(y.data() + b, g.data() + b, gin[0].data() + b, e - b);
                   b = e;
                 }
               });
}

Tensor scale_rows(const Tensor& a, const Tensor& w) {
  require_2d(a, "scale_rows");
  const std::size_t rows = a.rows(), cols = a.cols();
  if (w.size() != rows) throw DimensionError("scale_rows: weight count differs from rows");
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = w[r] * a[r * cols + c];
  }
  Tensor result = make(a.shape(), std::move(out), "scale_rows");
  if (!a.tracked() && !w.tracked()) return result;
  return track(std::move(result), {&a, &w},
               [av = a.values(), wv = w.values(), rows, cols](std::span<const double> g, GradInputs& gin) {
                 for (std::size_t r = 0; r < rows; ++r) {
                   for (std::size_t c = 0; c < cols; ++c) {
                     if (!gin[0].empty()) gin[0][r * cols + c] += wv[r] * g[r * cols + c];
                     if (!gin[1].empty()) gin[1][r] += av[r * cols + c] * g[r * cols + c];
                   }
                 }
               });
}

}  // namespace emoe
