// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace emoe::kernels {

namespace {

inline void matmul_row(const double* a_row, const double* b, double* c_row, std::size_t k,
                       std::size_t n) {
  std::fill(c_row, c_row + n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a_row[p];
    const double* b_row = b + p * n;
    for (std::size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
  }
}

}  // namespace

void matmul_serial(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) matmul_row(a.data() + i * k, b.data(), c.data() + i * n, k, n);
}

void matmul_parallel(std::span<const double> a, std::span<const double> b, std::span<double> c,
                     std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<long>(m);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    matmul_row(a.data() + r * k, b.data(), c.data() + r * n, k, n);
  }
}

void matmul_bt_serial(std::span<const double> a, std::span<const double> b, std::span<double> c,
                      std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* a_row = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* b_row = b.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a_row[p] * b_row[p];
      c[i * n + j] = acc;
    }
  }
}

void matmul_at_accumulate_serial(std::span<const double> a, std::span<const double> g,
                                 std::span<double> c, std::size_t m, std::size_t k,
                                 std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* a_row = a.data() + i * k;
    const double* g_row = g.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a_row[p];
      double* c_row = c.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) c_row[j] += av * g_row[j];
    }
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace emoe::kernels
