// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "emoe/diagnostics.hpp"
#include "emoe/errors.hpp"
#include "emoe/ops.hpp"

namespace emoe {

namespace {

struct ChunkOutput {
  std::vector<double> token_loss;
  std::vector<std::uint8_t> correct;
  std::uint64_t invocations = 0;
  std::vector<std::vector<RoutingRecord>> records;
};

ChunkOutput run_chunk(const MoeModel& model, const Dataset& data, const RoutingMode& mode, std::size_t begin,
                      std::size_t end) {
  const std::size_t d = data.dim();
  std::vector<std::size_t> ids(end - begin);
  std::iota(ids.begin(), ids.end(), begin);
  const auto first = data.inputs.data().begin() + static_cast<std::ptrdiff_t>(begin * d);
  Tensor x = Tensor::matrix(end - begin, d, std::vector<double>(first, first + static_cast<std::ptrdiff_t>((end - begin) * d)));
  ForwardResult fr = model_forward(x, ids, mode, model);

  ChunkOutput out;
  const std::size_t classes = fr.logits.cols();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto row = fr.logits.data().subspan(r * classes, classes);
    const std::size_t target = data.targets[begin + r];
    const auto arg = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    out.token_loss.push_back(row_cross_entropy(row, target));
    out.correct.push_back(arg == target ? 1 : 0);
  }
  out.invocations = fr.invocations;
  out.records = std::move(fr.records);
  return out;
}

EvalResult reduce(std::vector<ChunkOutput>& chunks, std::size_t n_layers, std::size_t n_tokens) {
  EvalResult res;
  res.n_tokens = n_tokens;
  res.records.resize(n_layers);
  double loss = 0.0;
  std::size_t correct = 0;
  std::uint64_t selected = 0;
  for (auto& c : chunks) {
    for (double v : c.token_loss) loss += v;
    for (auto v : c.correct) correct += v;
    res.invocations += c.invocations;
    for (std::size_t l = 0; l < n_layers; ++l) {
      for (auto& r : c.records[l]) {
        selected += r.selected.size();
        res.records[l].push_back(std::move(r));
      }
    }
  }
  const auto n = static_cast<double>(n_tokens);
  res.eval_loss = loss / n;
  res.accuracy = static_cast<double>(correct) / n;
  res.mean_active = static_cast<double>(selected) / (n * static_cast<double>(n_layers));
  double entropy = 0.0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    res.entropy_per_layer.push_back(router_entropy(res.records[l]));
    entropy += res.entropy_per_layer.back();
  }
  res.mean_entropy = entropy / static_cast<double>(n_layers);
  return res;
}

void check_inputs(const MoeModel& model, const Dataset& data, std::size_t chunk) {
  if (chunk == 0) throw ConfigError("evaluation chunk size must be positive");
  if (data.size() == 0) throw ConfigError("evaluation dataset is empty");
  if (data.dim() != model.shape().d_in) throw DimensionError("dataset width does not match the model input");
}

}  // namespace

EvalResult evaluate_serial(const MoeModel& model, const Dataset& data, const RoutingMode& mode, std::size_t chunk) {
  check_inputs(model, data, chunk);
  const std::size_t n = data.size();
  std::vector<ChunkOutput> chunks;
  for (std::size_t b = 0; b < n; b += chunk) chunks.push_back(run_chunk(model, data, mode, b, std::min(n, b + chunk)));
  return reduce(chunks, model.shape().n_layers, n);
}

EvalResult evaluate_parallel(const MoeModel& model, const Dataset& data, const RoutingMode& mode, std::size_t chunk) {
  check_inputs(model, data, chunk);
  const std::size_t n = data.size();
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<ChunkOutput> chunks(n_chunks);
  std::exception_ptr failure;
  const auto count = static_cast<long>(n_chunks);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    const auto c = static_cast<std::size_t>(i);
    try {
      chunks[c] = run_chunk(model, data, mode, c * chunk, std::min(n, (c + 1) * chunk));
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return reduce(chunks, model.shape().n_layers, n);
}

EvalResult evaluate(const Checkpoint& ckpt, const Dataset& data, std::size_t k_prime) {
  const std::size_t n = ckpt.model.shape().n_experts;
  if (k_prime < 1 || k_prime > n) {
    throw ConfigError("k' = " + std::to_string(k_prime) + " outside [1, " + std::to_string(n) + "]");
  }
  return evaluate_parallel(ckpt.model, data, TopKRouting{k_prime});
}

RoutingMode budget_routing(RunMode mode, double budget) {
  auto as_count = [&]() {
    if (!(budget >= 1.0) || budget != std::floor(budget)) {
      throw ConfigError("budget " + std::to_string(budget) + " must be a positive integer for this mode");
    }
    return static_cast<std::size_t>(budget);
  };
  switch (mode) {
    case RunMode::kTopK:
    case RunMode::kEmoe: return TopKRouting{as_count()};
    case RunMode::kTopP: return TopPRouting{budget};
    case RunMode::kAdaMoe: return AdaMoeRouting{as_count()};
  }
  throw ConfigError("unknown mode");
}

}  // namespace emoe
