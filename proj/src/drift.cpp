// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/drift.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "emoe/errors.hpp"

namespace emoe {

std::vector<CoOccurrenceMatrix> layer_cooccurrence(const EvalResult& res, std::size_t n_experts) {
  std::vector<CoOccurrenceMatrix> out;
  for (std::size_t l = 0; l < res.records.size(); ++l) {
    CoOccurrenceMatrix m = cooccurrence_parallel(res.records[l], n_experts);
    m.layer = l;
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<DriftRow> drift_profile(const MoeModel& model, const Dataset& data, const RoutingMode& reference,
                                    std::span<const RoutingMode> budgets, std::span<const double> budget_values) {
  if (budgets.size() != budget_values.size()) throw DimensionError("budget labels do not match budgets");
  if (budgets.empty()) throw ConfigError("drift_profile: no budgets");
  const std::size_t n = model.shape().n_experts;
  const auto ref = layer_cooccurrence(evaluate_parallel(model, data, reference), n);
  std::vector<DriftRow> rows;
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    const EvalResult res = evaluate_parallel(model, data, budgets[b]);
    const auto cur = layer_cooccurrence(res, n);
    DriftRow row;
    row.budget = budget_values[b];
    for (std::size_t l = 0; l < cur.size(); ++l) {
      row.delta_per_layer.push_back(cooc_distance(cur[l], ref[l]));
      row.mean_delta += row.delta_per_layer.back();
    }
    row.mean_delta /= static_cast<double>(cur.size());
    row.eval_loss = res.eval_loss;
    row.accuracy = res.accuracy;
    row.mean_entropy = res.mean_entropy;
    row.mean_active = res.mean_active;
    row.invocations = res.invocations;
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const DriftRow& a, const DriftRow& b) { return a.budget < b.budget; });
  return rows;
}

std::vector<DriftRow> drift_profile(const MoeModel& model, const Dataset& data, std::size_t k_train,
                                    std::span<const std::size_t> k_primes) {
  std::vector<RoutingMode> modes;
  std::vector<double> values;
  for (std::size_t k : k_primes) {
    if (k < 1 || k > model.shape().n_experts) throw ConfigError("k' = " + std::to_string(k) + " outside [1, N]");
    modes.emplace_back(TopKRouting{k});
    values.push_back(static_cast<double>(k));
  }
  return drift_profile(model, data, TopKRouting{k_train}, modes, values);
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "budget,eval_loss,accuracy,mean_delta,mean_entropy,invocations\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6g,%.9g,%.9g,%.9g,%.9g,%llu\n", r.budget, r.eval_loss, r.accuracy,
                  r.mean_delta, r.mean_entropy, static_cast<unsigned long long>(r.invocations));
    os << buf;
  }
  return os.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["mode"] = mode;
  j["manifest_sha256"] = manifest_sha256;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"budget", r.budget},
                         {"eval_loss", r.eval_loss},
                         {"accuracy", r.accuracy},
                         {"mean_delta", r.mean_delta},
                         {"delta_per_layer", r.delta_per_layer},
                         {"mean_entropy", r.mean_entropy},
                         {"mean_active", r.mean_active},
                         {"invocations", r.invocations}});
  }
  return j.dump(2) + "\n";
}

EvalReport sweep(const Checkpoint& ckpt, const Dataset& data, std::span<const double> budgets) {
  if (budgets.empty()) throw ConfigError("sweep needs at least one budget");
  std::vector<RoutingMode> modes;
  for (double b : budgets) modes.push_back(budget_routing(ckpt.config.mode, b));
  EvalReport report;
  report.mode = mode_name(ckpt.config.mode);
  report.manifest_sha256 = ckpt.manifest.value("manifest_sha256", "");
  report.rows = drift_profile(ckpt.model, data, ckpt.config.reference_routing(), modes, budgets);
  return report;
}

}  // namespace emoe
