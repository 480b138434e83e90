// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "json.hpp"

#include "emoe/baselines.hpp"
#include "emoe/elastic.hpp"
#include "emoe/losses.hpp"
#include "emoe/model.hpp"
#include "emoe/tasks.hpp"

namespace emoe {

enum class RunMode { kTopK, kEmoe, kTopP, kAdaMoe };

const char* mode_name(RunMode m);
RunMode parse_mode(const std::string& s);

struct OptimizerConfig {
  std::string kind = "adam";  // sgd | adam
  double learning_rate = 0.005;
  std::size_t batch_size = 128;
  std::size_t epochs = 4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct SeedConfig {
  std::uint64_t init = 1;
  std::uint64_t data = 1;
  std::uint64_t sampling = 1;
};

struct TaskConfig {
  std::size_t n_clusters = 8;
  std::size_t d = 16;
  std::size_t n_classes = 8;
  std::size_t train_size = 8192;
  std::size_t eval_size = 2048;
  double noise = 0.5;
  double center_scale = 1.0;
};

/// Everything a run needs. Fields that do not apply to `mode` are kept (and
/// written to the manifest) but ignored.
struct RunConfig {
  RunMode mode = RunMode::kEmoe;
  std::size_t d = 16;
  std::size_t d_hidden = 32;
  std::size_t n_layers = 3;
  std::size_t n_experts = 16;
  ElasticConfig elastic;
  double lambda = kDefaultLambda;
  double lb_coeff = kDefaultLbCoeff;
  double top_p = 0.15;
  AdaMoeConfig adamoe{0, 2};
  OptimizerConfig optimizer;
  SeedConfig seeds;
  TaskConfig task;
  std::string output_dir = "run";
  std::string source_text;  // verbatim config document, if any

  void validate() const;
  ModelShape model_shape() const;
  /// lambda for EMoE runs, 0 for the baselines.
  double effective_lambda() const;
  /// Routing used for training step `step`.
  RoutingMode training_routing(std::uint64_t step) const;
  /// Routing whose co-occurrence pattern stands for "training" in drift
  /// diagnostics (EMoE: sampled routing under a fixed diagnostic step).
  RoutingMode reference_routing() const;
  void set_all_seeds(std::uint64_t seed);
};

/// Parses a `key = value` document with [section] headers. Unknown keys are
/// rejected. The text is kept in `source_text`.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical document form; parse_config(to_config_text(c)) == c.
std::string to_config_text(const RunConfig& c);

nlohmann::json to_json(const RunConfig& c);
RunConfig config_from_json(const nlohmann::json& j);

/// The train/eval splits described by `task` under `seed`.
std::pair<Dataset, Dataset> make_task_data(const TaskConfig& task, std::uint64_t seed);

}  // namespace emoe
