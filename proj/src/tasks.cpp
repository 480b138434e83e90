// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "emoe/errors.hpp"
#include "emoe/io.hpp"
#include "emoe/rng.hpp"

namespace emoe {

namespace {

// Step keys separating the uses of the data seed.
constexpr std::uint64_t kGenerateStep = 0;
constexpr std::uint64_t kSplitStep = 1;

}  // namespace

Dataset gen_cluster_teacher(const ClusterTeacherParams& p) {
  if (p.n_clusters < 1 || p.d < 1 || p.n_classes < 2 || p.m_per_cluster < 1) {
    throw ConfigError("gen_cluster_teacher: sizes must be positive (at least two classes)");
  }
  if (!(p.noise >= 0.0) || !std::isfinite(p.noise)) throw ConfigError("gen_cluster_teacher: noise must be >= 0");

  RngStream rng(p.seed, RngPurpose::kData, kGenerateStep);
  std::vector<double> centers(p.n_clusters * p.d);
  for (double& c : centers) c = p.center_scale * rng.normal();
  std::vector<double> teachers(p.n_clusters * p.d * p.n_classes);
  for (double& t : teachers) t = rng.normal();

  const std::size_t total = p.n_clusters * p.m_per_cluster;
  std::vector<double> inputs(total * p.d);
  Dataset ds;
  ds.targets.resize(total);
  ds.meta.generator = "cluster_teacher";
  ds.meta.seed = p.seed;
  ds.meta.n_clusters = p.n_clusters;
  ds.meta.n_classes = p.n_classes;
  ds.meta.cluster.resize(total);

  std::vector<double> score(p.n_classes);
  for (std::size_t c = 0; c < p.n_clusters; ++c) {
    const double* center = centers.data() + c * p.d;
    const double* teacher = teachers.data() + c * p.d * p.n_classes;
    for (std::size_t m = 0; m < p.m_per_cluster; ++m) {
      const std::size_t s = c * p.m_per_cluster + m;
      for (std::size_t j = 0; j < p.d; ++j) {
        inputs[s * p.d + j] = center[j] + p.noise * rng.normal();
      }
      std::fill(score.begin(), score.end(), 0.0);
      for (std::size_t j = 0; j < p.d; ++j) {
        for (std::size_t k = 0; k < p.n_classes; ++k) score[k] += inputs[s * p.d + j] * teacher[j * p.n_classes + k];
      }
      ds.targets[s] = static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
      ds.meta.cluster[s] = c;
    }
  }
  ds.inputs = Tensor::matrix(total, p.d, std::move(inputs));
  return ds;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw ConfigError("subset: empty index list");
  const std::size_t d = ds.dim();
  std::vector<double> x(idx.size() * d);
  Dataset out;
  out.meta = ds.meta;
  out.meta.cluster.clear();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(ds.inputs.data().begin() + static_cast<std::ptrdiff_t>(idx[i] * d), d,
                x.begin() + static_cast<std::ptrdiff_t>(i * d));
    out.targets.push_back(ds.targets.at(idx[i]));
    if (!ds.meta.cluster.empty()) out.meta.cluster.push_back(ds.meta.cluster[idx[i]]);
  }
  out.inputs = Tensor::matrix(idx.size(), d, std::move(x));
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("split: fraction must lie in (0, 1)");
  const std::size_t total = ds.size();
  std::vector<std::size_t> cluster = ds.meta.cluster;
  if (cluster.empty()) cluster.assign(total, 0);
  const std::size_t n_groups = *std::max_element(cluster.begin(), cluster.end()) + 1;

  std::vector<std::vector<std::size_t>> members(n_groups);
  for (std::size_t i = 0; i < total; ++i) members[cluster[i]].push_back(i);

  // Largest-remainder apportionment of the train quota across clusters.
  const auto quota = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(total)));
  std::vector<std::size_t> take(n_groups);
  std::vector<double> remainder(n_groups);
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < n_groups; ++g) {
    const double exact = train_fraction * static_cast<double>(members[g].size());
    take[g] = static_cast<std::size_t>(std::floor(exact));
    remainder[g] = exact - static_cast<double>(take[g]);
    assigned += take[g];
  }
  std::vector<std::size_t> order(n_groups);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < quota && i < n_groups; ++i) {
    if (take[order[i]] < members[order[i]].size()) {
      ++take[order[i]];
      ++assigned;
    }
  }

  std::vector<std::size_t> train_idx, eval_idx;
  for (std::size_t g = 0; g < n_groups; ++g) {
    RngStream rng(seed, RngPurpose::kData, kSplitStep, g);
    const auto perm = permutation(members[g].size(), rng);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      (i < take[g] ? train_idx : eval_idx).push_back(members[g][perm[i]]);
    }
  }
  if (train_idx.empty() || eval_idx.empty()) throw ConfigError("split: one side would be empty");
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(eval_idx.begin(), eval_idx.end());
  return {subset(ds, train_idx), subset(ds, eval_idx)};
}

std::pair<std::filesystem::path, std::filesystem::path> save_dataset(const Dataset& ds,
                                                                      const std::filesystem::path& stem) {
  std::filesystem::path bin = stem, meta = stem;
  bin += ".bin";
  meta += ".json";
  nlohmann::json j;
  j["rows"] = ds.size();
  j["dim"] = ds.dim();
  j["targets"] = ds.targets;
  j["generator"] = ds.meta.generator;
  j["seed"] = ds.meta.seed;
  j["n_clusters"] = ds.meta.n_clusters;
  j["n_classes"] = ds.meta.n_classes;
  j["cluster"] = ds.meta.cluster;
  const std::string blob = io::encode_f64_le(ds.inputs.data());
  j["sha256"] = io::sha256_hex(blob);
  io::atomic_write(bin, blob);
  io::atomic_write(meta, j.dump(2));
  return {bin, meta};
}

Dataset load_dataset(const std::filesystem::path& stem) {
  std::filesystem::path bin = stem, meta = stem;
  bin += ".bin";
  meta += ".json";
  const auto j = nlohmann::json::parse(io::read_file(meta));
  const std::string blob = io::read_file(bin);
  if (io::sha256_hex(blob) != j.at("sha256").get<std::string>()) {
    throw DomainError("dataset " + bin.string() + " does not match its recorded hash");
  }
  Dataset ds;
  ds.inputs = Tensor::matrix(j.at("rows").get<std::size_t>(), j.at("dim").get<std::size_t>(), io::decode_f64_le(blob));
  ds.targets = j.at("targets").get<std::vector<std::size_t>>();
  ds.meta.generator = j.at("generator").get<std::string>();
  ds.meta.seed = j.at("seed").get<std::uint64_t>();
  ds.meta.n_clusters = j.at("n_clusters").get<std::size_t>();
  ds.meta.n_classes = j.at("n_classes").get<std::size_t>();
  ds.meta.cluster = j.at("cluster").get<std::vector<std::size_t>>();
  return ds;
}

}  // namespace emoe
