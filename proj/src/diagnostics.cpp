// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/diagnostics.hpp"

#include <cmath>
#include <string>

#include "json.hpp"

#include "emoe/errors.hpp"

namespace emoe {

CoOccurrenceCounts::CoOccurrenceCounts(std::size_t layer_, std::size_t n_)
    : layer(layer_), n(n_), counts(n_ * n_, 0) {}

void CoOccurrenceCounts::add(const RoutingRecord& rec) {
  for (std::size_t i : rec.selected) {
    if (i >= n) throw DimensionError("cooccurrence: expert index " + std::to_string(i) + " >= N");
    for (std::size_t j : rec.selected) ++counts[i * n + j];
  }
  ++n_tokens;
}

void CoOccurrenceCounts::merge(const CoOccurrenceCounts& other) {
  if (other.n != n) throw DimensionError("cooccurrence: cannot merge counts of different N");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  n_tokens += other.n_tokens;
}

CoOccurrenceMatrix CoOccurrenceCounts::normalized() const {
  if (n_tokens == 0) throw ConfigError("cooccurrence: no tokens");
  CoOccurrenceMatrix m;
  m.layer = layer;
  m.n = n;
  m.n_tokens = n_tokens;
  m.values.resize(counts.size());
  const auto denom = static_cast<double>(n_tokens);
  for (std::size_t i = 0; i < counts.size(); ++i) m.values[i] = static_cast<double>(counts[i]) / denom;
  return m;
}

CoOccurrenceMatrix cooccurrence(std::span<const RoutingRecord> records, std::size_t n_experts) {
  if (records.empty()) throw ConfigError("cooccurrence: empty record list");
  CoOccurrenceCounts c(records.front().layer, n_experts);
  for (const auto& r : records) c.add(r);
  return c.normalized();
}

CoOccurrenceMatrix cooccurrence_parallel(std::span<const RoutingRecord> records, std::size_t n_experts) {
  if (records.empty()) throw ConfigError("cooccurrence: empty record list");
  CoOccurrenceCounts total(records.front().layer, n_experts);
  const auto count = static_cast<long>(records.size());
#pragma omp parallel
  {
    CoOccurrenceCounts local(total.layer, n_experts);
#pragma omp for schedule(static) nowait
    for (long i = 0; i < count; ++i) local.add(records[static_cast<std::size_t>(i)]);
#pragma omp critical
    total.merge(local);
  }
  return total.normalized();
}

double cooc_distance(const CoOccurrenceMatrix& a, const CoOccurrenceMatrix& b) {
  if (a.n != b.n || a.values.size() != b.values.size()) throw DimensionError("cooc_distance: matrix sizes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double router_entropy(std::span<const double> rows, std::size_t n) {
  if (n == 0 || rows.empty() || rows.size() % n != 0) throw DimensionError("router_entropy: ragged rows");
  const std::size_t count = rows.size() / n;
  double total = 0.0;
  for (std::size_t r = 0; r < count; ++r) {
    double h = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = rows[r * n + i];
      if (p > 0.0) h -= p * std::log(p);
    }
    total += h;
  }
  return total / static_cast<double>(count);
}

double router_entropy(std::span<const RoutingRecord> records) {
  if (records.empty()) throw ConfigError("router_entropy: no records");
  const std::size_t n = records.front().full_probs.size();
  std::vector<double> rows;
  rows.reserve(records.size() * n);
  for (const auto& r : records) rows.insert(rows.end(), r.full_probs.begin(), r.full_probs.end());
  return router_entropy(rows, n);
}

std::string to_json(const CoOccurrenceMatrix& m) {
  nlohmann::json j;
  j["layer"] = m.layer;
  j["n"] = m.n;
  j["n_tokens"] = m.n_tokens;
  j["values"] = m.values;
  return j.dump();
}

CoOccurrenceMatrix cooccurrence_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  CoOccurrenceMatrix m;
  m.layer = j.at("layer").get<std::size_t>();
  m.n = j.at("n").get<std::size_t>();
  m.n_tokens = j.at("n_tokens").get<std::size_t>();
  m.values = j.at("values").get<std::vector<double>>();
  if (m.values.size() != m.n * m.n) throw DimensionError("cooccurrence json: values do not form an n x n matrix");
  return m;
}

}  // namespace emoe
