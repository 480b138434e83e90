// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference vs OpenMP variant for the three parallel paths.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <vector>

#include "emoe/diagnostics.hpp"
#include "emoe/evaluate.hpp"
#include "emoe/kernels.hpp"
#include "emoe/rng.hpp"
#include "emoe/tasks.hpp"

namespace {

using namespace emoe;

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, RngPurpose::kData);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

template <bool Parallel>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_values(n * n, 1), b = random_values(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::matmul_parallel(a, b, c, n, n, n);
    } else {
      kernels::matmul_serial(a, b, c, n, n, n);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
  state.counters["threads"] = Parallel ? kernels::max_threads() : 1;
}
BENCHMARK(BM_Matmul<false>)->Name("matmul/serial")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Matmul<true>)->Name("matmul/openmp")->Arg(64)->Arg(128)->Arg(256);

struct EvalFixture {
  MoeModel model{ModelShape{}, 1};
  Dataset data = gen_cluster_teacher(ClusterTeacherParams{8, 16, 8, 256, 0.5, 1.0, 2});
};

template <bool Parallel>
void BM_Evaluate(benchmark::State& state) {
  static const EvalFixture fx;
  const TopKRouting mode{static_cast<std::size_t>(state.range(0))};
  for (auto _ : state) {
    EvalResult r = Parallel ? evaluate_parallel(fx.model, fx.data, mode) : evaluate_serial(fx.model, fx.data, mode);
    benchmark::DoNotOptimize(r.eval_loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(fx.data.size()));
}
BENCHMARK(BM_Evaluate<false>)->Name("evaluate/serial")->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Evaluate<true>)->Name("evaluate/openmp")->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

std::vector<RoutingRecord> random_records(std::size_t count, std::size_t n, std::size_t k) {
  RngStream rng(3, RngPurpose::kData);
  std::vector<RoutingRecord> out(count);
  for (auto& r : out) {
    auto perm = permutation(n, rng);
    r.selected.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(r.selected.begin(), r.selected.end());
  }
  return out;
}

template <bool Parallel>
void BM_Cooccurrence(benchmark::State& state) {
  const auto recs = random_records(static_cast<std::size_t>(state.range(0)), 16, 4);
  for (auto _ : state) {
    CoOccurrenceMatrix m = Parallel ? cooccurrence_parallel(recs, 16) : cooccurrence(recs, 16);
    benchmark::DoNotOptimize(m.values.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Cooccurrence<false>)->Name("cooccurrence/serial")->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_Cooccurrence<true>)->Name("cooccurrence/openmp")->Arg(1 << 12)->Arg(1 << 16);

}  // namespace

BENCHMARK_MAIN();
