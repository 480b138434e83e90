// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/experiments.hpp"

#include <cstdio>
#include <sstream>

#include "emoe/errors.hpp"
#include "emoe/losses.hpp"
#include "emoe/ops.hpp"
#include "emoe/rng.hpp"
#include "emoe/train.hpp"

namespace emoe {

GradCheckResult training_step_gradcheck(std::uint64_t seed, double eps) {
  const ModelShape shape{8, 8, 8, 1, 8, 4, 0};
  const MoeModel base(shape, seed);
  RngStream rng(seed, RngPurpose::kData, 7);
  std::vector<double> xs(4 * shape.d_in);
  for (double& v : xs) v = rng.normal();
  const Tensor x = Tensor::matrix(4, shape.d_in, xs);
  const std::vector<std::size_t> ids{0, 1, 2, 3};
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < 4; ++i) targets.push_back(static_cast<std::size_t>(rng.uniform_int(0, 3)));
  const EmoeRouting routing{ElasticConfig{2, 4, true}, seed, 0};

  auto objective = [&](std::span<const Tensor> params) {
    MoeModel m = base;
    auto named = m.named_parameters();
    for (std::size_t i = 0; i < named.size(); ++i) *named[i].second = params[i];
    ForwardResult fr = model_forward(x, ids, routing, m);
    Tensor ce = cross_entropy(fr.logits, targets);
    Tensor lb = load_balance_loss(fr.router_probs[0], fr.records[0], shape.n_experts);
    Tensor hr = hr_loss(fr.router_probs[0]);
    return total_loss(ce, lb, hr, kDefaultLambda);
  };
  std::vector<Tensor> params;
  for (const auto& [name, t] : base.named_parameters()) params.push_back(*t);
  return grad_check(objective, params, eps);
}

std::vector<AblationArm> ablation_arms(const RunConfig& base) {
  std::vector<AblationArm> arms;
  RunConfig emoe = base;
  emoe.mode = RunMode::kEmoe;
  arms.push_back({"emoe", emoe});
  RunConfig no_coact = emoe;
  no_coact.elastic.sampling_enabled = false;
  arms.push_back({"no-coact", no_coact});
  RunConfig no_hr = emoe;
  no_hr.lambda = 0.0;
  arms.push_back({"no-hr", no_hr});
  RunConfig topk = base;
  topk.mode = RunMode::kTopK;
  arms.push_back({"topk", topk});
  return arms;
}

SeedRun run_arm(const AblationArm& arm, std::uint64_t seed, std::span<const std::size_t> k_primes) {
  RunConfig cfg = arm.config;
  cfg.set_all_seeds(seed);
  const auto data = make_task_data(cfg.task, cfg.seeds.data);
  TrainResult tr = train(cfg, data.first);
  SeedRun run;
  run.arm = arm.name;
  run.seed = seed;
  run.train_invocations = tr.total_invocations;
  run.rows = drift_profile(tr.model, data.second, cfg.elastic.k_train, k_primes);
  const RoutingMode reference = cfg.reference_routing();
  if (std::holds_alternative<TopKRouting>(reference)) {
    run.reference_rows = run.rows;
  } else {
    std::vector<RoutingMode> modes;
    std::vector<double> values;
    for (std::size_t k : k_primes) {
      modes.emplace_back(TopKRouting{k});
      values.push_back(static_cast<double>(k));
    }
    run.reference_rows = drift_profile(tr.model, data.second, reference, modes, values);
  }
  return run;
}

double mean_accuracy(std::span<const SeedRun> runs, const std::string& arm, std::size_t k_prime) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (r.arm != arm) continue;
    for (const auto& row : r.rows) {
      if (row.budget == static_cast<double>(k_prime)) {
        sum += row.accuracy;
        ++n;
      }
    }
  }
  if (n == 0) throw ConfigError("no runs of arm " + arm + " at k' = " + std::to_string(k_prime));
  return sum / static_cast<double>(n);
}

std::string ablation_csv(std::span<const SeedRun> runs) {
  std::ostringstream os;
  os << "arm,seed,k_prime,accuracy,eval_loss,mean_delta,train_invocations\n";
  char buf[256];
  for (const auto& r : runs) {
    for (const auto& row : r.rows) {
      std::snprintf(buf, sizeof buf, "%s,%llu,%g,%.9g,%.9g,%.9g,%llu\n", r.arm.c_str(),
                    static_cast<unsigned long long>(r.seed), row.budget, row.accuracy, row.eval_loss,
                    row.mean_delta, static_cast<unsigned long long>(r.train_invocations));
      os << buf;
    }
  }
  return os.str();
}

}  // namespace emoe
