// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>

#include "emoe/errors.hpp"
#include "emoe/io.hpp"
#include "emoe/ops.hpp"
#include "emoe/rng.hpp"
#include "emoe/tape.hpp"
#include "emoe/tasks.hpp"

namespace emoe {
namespace {

TEST(ClusterTeacher, ZeroNoiseGivesCenters) {
  const ClusterTeacherParams p{5, 7, 3, 1, 0.0, 1.5, 61};
  const Dataset ds = gen_cluster_teacher(p);
  ASSERT_EQ(ds.size(), 5u);
  RngStream rng(61, RngPurpose::kData, 0);
  for (std::size_t i = 0; i < 5 * 7; ++i) EXPECT_EQ(ds.inputs[i], 1.5 * rng.normal());
}

TEST(ClusterTeacher, ShapesLabelsAndMeta) {
  const ClusterTeacherParams p{4, 6, 5, 30, 0.5, 1.0, 62};
  const Dataset ds = gen_cluster_teacher(p);
  EXPECT_EQ(ds.size(), 120u);
  EXPECT_EQ(ds.dim(), 6u);
  EXPECT_EQ(ds.meta.generator, "cluster_teacher");
  EXPECT_EQ(ds.meta.seed, 62u);
  std::set<std::size_t> classes;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ASSERT_LT(ds.targets[i], 5u);
    EXPECT_EQ(ds.meta.cluster[i], i / 30);
    classes.insert(ds.targets[i]);
  }
  EXPECT_GT(classes.size(), 2u);
}

TEST(ClusterTeacher, SeedDeterminism) {
  const ClusterTeacherParams p{8, 16, 8, 50, 0.5, 1.0, 63};
  const Dataset a = gen_cluster_teacher(p), b = gen_cluster_teacher(p);
  EXPECT_EQ(a.inputs.values(), b.inputs.values());
  EXPECT_EQ(a.targets, b.targets);
  EXPECT_EQ(io::sha256_hex(io::encode_f64_le(a.inputs.values())),
            io::sha256_hex(io::encode_f64_le(b.inputs.values())));
  ClusterTeacherParams q = p;
  q.seed = 64;
  EXPECT_NE(gen_cluster_teacher(q).inputs.values(), a.inputs.values());
}

TEST(ClusterTeacher, StatisticsAreSeedStable) {
  auto stats = [](const Dataset& ds) {
    std::vector<double> mean(ds.dim(), 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (std::size_t j = 0; j < ds.dim(); ++j) mean[j] += ds.inputs.at(i, j);
    }
    for (double& m : mean) m /= static_cast<double>(ds.size());
    double trace = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (std::size_t j = 0; j < ds.dim(); ++j) trace += (ds.inputs.at(i, j) - mean[j]) * (ds.inputs.at(i, j) - mean[j]);
    }
    mean.push_back(trace);
    return mean;
  };
  const ClusterTeacherParams p{8, 16, 8, 100, 0.5, 1.0, 65};
  EXPECT_EQ(stats(gen_cluster_teacher(p)), stats(gen_cluster_teacher(p)));
}

TEST(ClusterTeacher, Validation) {
  EXPECT_THROW(gen_cluster_teacher(ClusterTeacherParams{0, 4, 3, 5, 0.1, 1.0, 1}), ConfigError);
  EXPECT_THROW(gen_cluster_teacher(ClusterTeacherParams{2, 0, 3, 5, 0.1, 1.0, 1}), ConfigError);
  EXPECT_THROW(gen_cluster_teacher(ClusterTeacherParams{2, 4, 1, 5, 0.1, 1.0, 1}), ConfigError);
  EXPECT_THROW(gen_cluster_teacher(ClusterTeacherParams{2, 4, 3, 0, 0.1, 1.0, 1}), ConfigError);
  EXPECT_THROW(gen_cluster_teacher(ClusterTeacherParams{2, 4, 3, 5, -0.1, 1.0, 1}), ConfigError);
}

TEST(ClusterTeacher, ClustersAreLinearlySeparable) {
  const ClusterTeacherParams p{8, 16, 8, 100, 0.1, 1.0, 66};
  const Dataset ds = gen_cluster_teacher(p);
  Tensor w = Tensor::zeros({16, 8}), b = Tensor::zeros({1, 8});
  for (int it = 0; it < 300; ++it) {
    Tape tape;
    const Tensor wt = tape.leaf(w), bt = tape.leaf(b);
    const Tensor loss = cross_entropy(add_row_bias(matmul(ds.inputs, wt), bt), ds.meta.cluster);
    tape.backward(loss);
    w = sub(w, scale(tape.grad(wt), 0.5));
    b = sub(b, scale(tape.grad(bt), 0.5));
  }
  const Tensor logits = add_row_bias(matmul(ds.inputs, w), b);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto row = logits.data().subspan(i * 8, 8);
    correct += static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()) == ds.meta.cluster[i];
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(ds.size()), 0.99);
}

TEST(Split, HalfOfHundred) {
  const Dataset ds = gen_cluster_teacher(ClusterTeacherParams{4, 3, 3, 25, 0.5, 1.0, 67});
  const auto [train, eval] = split(ds, 0.5, 1);
  EXPECT_EQ(train.size(), 50u);
  EXPECT_EQ(eval.size(), 50u);
  EXPECT_THROW(split(ds, 0.0, 1), ConfigError);
  EXPECT_THROW(split(ds, 1.0, 1), ConfigError);
}

// Row identity: samples are distinct points, so the raw values act as a key.
std::vector<double> row_of(const Dataset& ds, std::size_t i) {
  return std::vector<double>(ds.inputs.data().begin() + static_cast<std::ptrdiff_t>(i * ds.dim()),
                             ds.inputs.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * ds.dim()));
}

TEST(Split, PartitionDisjointAndStratified) {
  const Dataset ds = gen_cluster_teacher(ClusterTeacherParams{7, 5, 4, 37, 0.5, 1.0, 68});
  for (double fraction : {0.2, 0.5, 0.8, 0.9}) {
    const auto [train, eval] = split(ds, fraction, 3);
    EXPECT_EQ(train.size() + eval.size(), ds.size());
    EXPECT_EQ(train.size(), static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.size()))));

    std::multiset<std::pair<std::vector<double>, std::size_t>> original, joined;
    std::set<std::vector<double>> train_rows;
    for (std::size_t i = 0; i < ds.size(); ++i) original.emplace(row_of(ds, i), ds.targets[i]);
    for (std::size_t i = 0; i < train.size(); ++i) {
      joined.emplace(row_of(train, i), train.targets[i]);
      train_rows.insert(row_of(train, i));
    }
    for (std::size_t i = 0; i < eval.size(); ++i) {
      joined.emplace(row_of(eval, i), eval.targets[i]);
      EXPECT_FALSE(train_rows.count(row_of(eval, i)));
    }
    EXPECT_EQ(joined, original);

    std::map<std::size_t, std::size_t> per_cluster;
    for (auto c : train.meta.cluster) ++per_cluster[c];
    for (std::size_t c = 0; c < 7; ++c) EXPECT_LE(std::abs(static_cast<double>(per_cluster[c]) - fraction * 37), 1.0);
  }
}

TEST(Split, SeedDeterministic) {
  const Dataset ds = gen_cluster_teacher(ClusterTeacherParams{4, 3, 3, 25, 0.5, 1.0, 69});
  const auto a = split(ds, 0.8, 5), b = split(ds, 0.8, 5), c = split(ds, 0.8, 6);
  EXPECT_EQ(a.first.inputs.values(), b.first.inputs.values());
  EXPECT_NE(a.first.inputs.values(), c.first.inputs.values());
}

TEST(DatasetIo, RoundTripAndTamper) {
  const auto dir = std::filesystem::temp_directory_path() / "emoe_test_tasks";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const Dataset ds = gen_cluster_teacher(ClusterTeacherParams{3, 4, 3, 10, 0.5, 1.0, 70});
  const auto [bin, json] = save_dataset(ds, dir / "data");
  const Dataset back = load_dataset(dir / "data");
  EXPECT_EQ(back.inputs.values(), ds.inputs.values());
  EXPECT_EQ(back.targets, ds.targets);
  EXPECT_EQ(back.meta.cluster, ds.meta.cluster);
  EXPECT_EQ(back.meta.generator, ds.meta.generator);
  std::string bytes = io::read_file(bin);
  bytes[3] ^= 0x1;
  io::atomic_write(bin, bytes);
  EXPECT_THROW(load_dataset(dir / "data"), DomainError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace emoe
