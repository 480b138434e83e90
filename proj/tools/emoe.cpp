// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: train, eval, sweep, diagnose, verify-sampling,
// gradcheck and ablate.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "emoe/checkpoint.hpp"
#include "emoe/config.hpp"
#include "emoe/drift.hpp"
#include "emoe/elastic.hpp"
#include "emoe/errors.hpp"
#include "emoe/evaluate.hpp"
#include "emoe/experiments.hpp"
#include "emoe/io.hpp"
#include "emoe/rng.hpp"
#include "emoe/train.hpp"

namespace fs = std::filesystem;
using namespace emoe;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

fs::path output_root() {
  const char* env = std::getenv("EMOE_OUTPUT_ROOT");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::current_path();
}

fs::path resolve(const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : output_root() / path;
}

struct TrainArgs {
  std::string config;
  std::string mode;
  std::optional<std::uint64_t> seed;
  bool no_coact = false;
  std::optional<double> lambda;
  std::optional<std::size_t> epochs;
  std::string output_dir;
};

RunConfig build_config(const TrainArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_config(a.config);
  if (!a.mode.empty()) cfg.mode = parse_mode(a.mode);
  if (a.seed) cfg.set_all_seeds(*a.seed);
  if (a.no_coact) cfg.elastic.sampling_enabled = false;
  if (a.lambda) cfg.lambda = *a.lambda;
  if (a.epochs) cfg.optimizer.epochs = *a.epochs;
  if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
  cfg.validate();
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  RunConfig cfg = build_config(a);
  const fs::path out = resolve(cfg.output_dir);
  TrainOptions opts;
  opts.output_dir = out;
  try {
    const TrainResult r = train(cfg, opts);
    std::printf("trained %s: %zu steps, final loss %.6f, expert invocations %llu\n", mode_name(cfg.mode),
                r.metrics.size(), r.epoch_mean_total.back(), static_cast<unsigned long long>(r.total_invocations));
    std::printf("checkpoint: %s\n", (out / "final").string().c_str());
  } catch (const TrainingDiverged& e) {
    std::fprintf(stderr, "training diverged at step %llu: %s\n", static_cast<unsigned long long>(e.step()), e.what());
    return kRuntime;
  }
  return kOk;
}

Dataset eval_split(const Checkpoint& ckpt) { return make_task_data(ckpt.config.task, ckpt.config.seeds.data).second; }

int cmd_eval(const std::string& ckpt_dir, double budget) {
  const Checkpoint ckpt = load_checkpoint(ckpt_dir);
  const Dataset data = eval_split(ckpt);
  const EvalResult r = evaluate_parallel(ckpt.model, data, budget_routing(ckpt.config.mode, budget));
  nlohmann::json j{{"budget", budget},           {"routing", describe(budget_routing(ckpt.config.mode, budget))},
                   {"eval_loss", r.eval_loss},   {"accuracy", r.accuracy},
                   {"mean_active", r.mean_active}, {"invocations", r.invocations},
                   {"mean_entropy", r.mean_entropy}};
  std::cout << j.dump() << "\n";
  return kOk;
}

int cmd_sweep(const std::string& ckpt_dir, const std::vector<double>& budgets, const std::string& out_dir) {
  const Checkpoint ckpt = load_checkpoint(ckpt_dir);
  const EvalReport report = sweep(ckpt, eval_split(ckpt), budgets);
  const fs::path out = out_dir.empty() ? fs::path(ckpt_dir) : resolve(out_dir);
  io::atomic_write(out / "report.csv", report.to_csv());
  io::atomic_write(out / "report.json", report.to_json());
  std::cout << report.to_csv();
  return kOk;
}

int cmd_diagnose(const std::string& ckpt_dir, const std::vector<std::size_t>& k_primes, const std::string& out_dir) {
  const Checkpoint ckpt = load_checkpoint(ckpt_dir);
  const Dataset data = eval_split(ckpt);
  const fs::path out = out_dir.empty() ? fs::path(ckpt_dir) : resolve(out_dir);
  const std::size_t n = ckpt.model.shape().n_experts;
  const auto ref = layer_cooccurrence(evaluate_parallel(ckpt.model, data, ckpt.config.reference_routing()), n);
  for (const auto& m : ref) io::atomic_write(out / ("cooc_layer" + std::to_string(m.layer) + ".json"), to_json(m));

  std::vector<RoutingMode> modes;
  std::vector<double> values;
  for (std::size_t k : k_primes) {
    if (k < 1 || k > n) throw ConfigError("k' = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    modes.emplace_back(TopKRouting{k});
    values.push_back(static_cast<double>(k));
  }
  const auto rows = drift_profile(ckpt.model, data, ckpt.config.reference_routing(), modes, values);
  std::string csv = "k_prime,delta,metric\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%g,%.9g,%.9g\n", r.budget, r.mean_delta, r.accuracy);
    csv += buf;
  }
  io::atomic_write(out / "delta.csv", csv);
  std::cout << csv;
  return kOk;
}

int cmd_verify_sampling(std::size_t k_train, std::size_t k_ideal, std::size_t draws, std::uint64_t seed) {
  if (draws == 0) throw ConfigError("draws must be positive");
  ElasticConfig cfg{k_train, k_ideal, true};
  cfg.validate(k_ideal);
  if (k_train < 2) throw ConfigError("pair co-activation needs k_train >= 2");
  std::vector<std::size_t> pool(k_ideal);
  for (std::size_t i = 0; i < k_ideal; ++i) pool[i] = i;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < draws; ++t) {
    RngStream rng(seed, RngPurpose::kSubset, 0, t);
    const auto s = sample_coact(pool, k_train, rng);
    if (s[0] == 0 && s[1] == 1) ++hits;
  }
  const double p = pair_coactivation_prob(k_ideal, k_train);
  const double est = static_cast<double>(hits) / static_cast<double>(draws);
  const double bound = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(draws));
  const bool ok = std::abs(est - p) <= bound;
  std::printf("closed form: %.9f\n", p);
  std::printf("binomial ratio: %.9f\n", pair_coactivation_prob_binomial(k_ideal, k_train));
  std::printf("monte carlo: %.9f (%zu / %zu draws)\n", est, hits, draws);
  std::printf("3-sigma bound: +/- %.9f -> %s\n", bound, ok ? "within" : "OUTSIDE");
  return ok ? kOk : kRuntime;
}

int cmd_gradcheck(std::uint64_t seed, double eps) {
  const GradCheckResult r = training_step_gradcheck(seed, eps);
  const bool ok = r.max_rel_error < 1e-4;
  std::printf("checked %zu parameters, max relative error %.3e (analytic %.9e, numeric %.9e) -> %s\n", r.checked,
              r.max_rel_error, r.analytic, r.numeric, ok ? "ok" : "FAIL");
  return ok ? kOk : kRuntime;
}

int cmd_ablate(const TrainArgs& a, const std::vector<std::uint64_t>& seeds, const std::vector<std::size_t>& k_primes) {
  const RunConfig base = build_config(a);
  std::vector<SeedRun> runs;
  for (const auto& arm : ablation_arms(base)) {
    for (std::uint64_t s : seeds) {
      runs.push_back(run_arm(arm, s, k_primes));
      std::fprintf(stderr, "done %s seed %llu\n", arm.name.c_str(), static_cast<unsigned long long>(s));
    }
  }
  const std::string csv = ablation_csv(runs);
  io::atomic_write(resolve(base.output_dir) / "ablation.csv", csv);
  std::cout << csv;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elastic mixture-of-experts toy lab"};
  app.require_subcommand(1);

  TrainArgs targs;
  auto add_train_flags = [&](CLI::App* sub) {
    sub->add_option("--config", targs.config, "INI run configuration")->check(CLI::ExistingFile);
    sub->add_option("--mode", targs.mode, "topk | emoe | topp | adamoe");
    sub->add_option("--seed", targs.seed, "sets init, data and sampling seeds");
    sub->add_flag("--no-coact", targs.no_coact, "disable co-activation sampling");
    sub->add_option("--lambda", targs.lambda, "HR loss weight");
    sub->add_option("--epochs", targs.epochs);
    sub->add_option("--output-dir", targs.output_dir);
  };
  auto* train_cmd = app.add_subcommand("train", "train a model and write checkpoints");
  add_train_flags(train_cmd);

  std::string ckpt;
  double budget = 2;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint at one budget");
  eval_cmd->add_option("--checkpoint", ckpt)->required();
  eval_cmd->add_option("--k,--budget", budget, "k' (topk/emoe), p (topp) or k_nominal (adamoe)");

  std::vector<double> budgets{1, 2, 3, 4, 6, 8};
  std::string out_dir;
  auto* sweep_cmd = app.add_subcommand("sweep", "evaluate a checkpoint over budgets");
  sweep_cmd->add_option("--checkpoint", ckpt)->required();
  sweep_cmd->add_option("--budgets", budgets)->delimiter(',');
  sweep_cmd->add_option("--output-dir", out_dir);

  std::vector<std::size_t> k_primes{2, 3, 4, 6, 8};
  auto* diag_cmd = app.add_subcommand("diagnose", "co-occurrence matrices and drift profile");
  diag_cmd->add_option("--checkpoint", ckpt)->required();
  diag_cmd->add_option("--k-prime", k_primes)->delimiter(',');
  diag_cmd->add_option("--output-dir", out_dir);

  std::size_t k_train = 2, k_ideal = 8, draws = 100000;
  std::uint64_t seed = 1;
  auto* vs_cmd = app.add_subcommand("verify-sampling", "Monte-Carlo check of pair co-activation");
  vs_cmd->add_option("--k-train", k_train);
  vs_cmd->add_option("--k-ideal", k_ideal);
  vs_cmd->add_option("--draws", draws);
  vs_cmd->add_option("--seed", seed);

  double eps = 1e-5;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of one EMoE training step");
  gc_cmd->add_option("--seed", seed);
  gc_cmd->add_option("--eps", eps);

  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<std::size_t> ablate_k{1, 2, 4, 6};
  auto* ab_cmd = app.add_subcommand("ablate", "EMoE, w/o co-activation, w/o HR loss and Top-k over seeds");
  add_train_flags(ab_cmd);
  ab_cmd->add_option("--seeds", seeds)->delimiter(',');
  ab_cmd->add_option("--k-prime", ablate_k)->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (*train_cmd) return cmd_train(targs);
    if (*eval_cmd) return cmd_eval(ckpt, budget);
    if (*sweep_cmd) return cmd_sweep(ckpt, budgets, out_dir);
    if (*diag_cmd) return cmd_diagnose(ckpt, k_primes, out_dir);
    if (*vs_cmd) return cmd_verify_sampling(k_train, k_ideal, draws, seed);
    if (*gc_cmd) return cmd_gradcheck(seed, eps);
    if (*ab_cmd) return cmd_ablate(targs, seeds, ablate_k);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failed: %s\n", e.what());
    return kRuntime;
  }
  return kValidation;
}
