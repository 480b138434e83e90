// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

// Dense inner loops. Every kernel has a serial reference and an OpenMP
// variant; the OpenMP variants partition over output rows only, so each
// output element is accumulated in the same order and results are
// bit-identical to the serial path for any thread count.
namespace emoe::kernels {

/// c[m x n] = a[m x k] * b[k x n].
void matmul_serial(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t k, std::size_t n);
void matmul_parallel(std::span<const double> a, std::span<const double> b, std::span<double> c,
                     std::size_t m, std::size_t k, std::size_t n);

/// c[m x n] = a[m x k] * b^T where b is [n x k].
void matmul_bt_serial(std::span<const double> a, std::span<const double> b, std::span<double> c,
                      std::size_t m, std::size_t k, std::size_t n);
/// c[k x n] += a^T * g where a is [m x k], g is [m x n].
void matmul_at_accumulate_serial(std::span<const double> a, std::span<const double> g,
                                 std::span<double> c, std::size_t m, std::size_t k, std::size_t n);

/// Number of threads the OpenMP variants will use (1 without OpenMP).
int max_threads();

}  // namespace emoe::kernels
