// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/train.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "emoe/checkpoint.hpp"
#include "emoe/errors.hpp"
#include "emoe/io.hpp"
#include "emoe/losses.hpp"
#include "emoe/ops.hpp"
#include "emoe/rng.hpp"
#include "emoe/tape.hpp"

namespace emoe {

namespace {

constexpr std::uint64_t kShuffleStepBase = 1000;

class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, MoeModel& model) : cfg_(cfg) {
    if (cfg_.kind == "adam") {
      for (const auto& [name, t] : model.named_parameters()) {
        m_.emplace_back(t->size(), 0.0);
        v_.emplace_back(t->size(), 0.0);
      }
    }
  }

  void step(MoeModel& model, const std::vector<std::vector<double>>& grads) {
    auto params = model.named_parameters();
    ++t_;
    const double lr = cfg_.learning_rate;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i].second->mutable_data();
      const auto& g = grads[i];
      if (cfg_.kind == "adam") {
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t j = 0; j < p.size(); ++j) {
          m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g[j];
          v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g[j] * g[j];
          p[j] -= lr * (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + cfg_.adam_eps);
        }
      } else {
        for (std::size_t j = 0; j < p.size(); ++j) p[j] -= lr * g[j];
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

Tensor batch_rows(const Dataset& data, std::span<const std::size_t> idx) {
  const std::size_t d = data.dim();
  std::vector<double> vals;
  vals.reserve(idx.size() * d);
  const auto src = data.inputs.data();
  for (std::size_t i : idx) vals.insert(vals.end(), src.begin() + static_cast<std::ptrdiff_t>(i * d),
                                        src.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
  return Tensor::matrix(idx.size(), d, std::move(vals));
}

}  // namespace

std::string to_jsonl(const StepMetrics& m) {
  nlohmann::json j{{"step", m.step},   {"epoch", m.epoch},   {"ce", m.ce},
                   {"lb", m.lb},       {"hr", m.hr},         {"total", m.total},
                   {"mean_k", m.mean_k}, {"invocations", m.invocations},
                   {"hr_per_layer", m.hr_per_layer}, {"lb_per_layer", m.lb_per_layer}};
  return j.dump() + "\n";
}


TrainResult train(const RunConfig& config, const TrainOptions& options) {
  config.validate();
  const auto data = make_task_data(config.task, config.seeds.data);
  return train(config, data.first, options);
}

TrainResult train(const RunConfig& config, const Dataset& train_set, const TrainOptions& options) {
  config.validate();
  const ModelShape shape = config.model_shape();
  if (train_set.dim() != shape.d_in) throw DimensionError("training data width does not match the model input");
  if (train_set.size() == 0) throw ConfigError("training set is empty");

  TrainResult result{MoeModel(shape, config.seeds.init), {}, 0, {}, {}};
  MoeModel& model = result.model;
  Optimizer opt(config.optimizer, model);
  const double lambda = config.effective_lambda();
  const std::size_t n_layers = shape.n_layers;
  const std::size_t n_real = shape.n_experts;
  const std::size_t bs = config.optimizer.batch_size;

  std::ofstream metrics_file;
  if (options.output_dir) {
    std::filesystem::create_directories(*options.output_dir);
    io::atomic_write(*options.output_dir / "config.ini",
                     config.source_text.empty() ? to_config_text(config) : config.source_text);
    metrics_file.open(*options.output_dir / "metrics.jsonl", std::ios::trunc);
  }

  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < config.optimizer.epochs; ++epoch) {
    RngStream shuffle(config.seeds.data, RngPurpose::kData, kShuffleStepBase + epoch);
    const std::vector<std::size_t> order = permutation(train_set.size(), shuffle);
    std::vector<CoOccurrenceCounts> cooc;
    for (std::size_t l = 0; l < n_layers; ++l) cooc.emplace_back(l, n_real);
    double epoch_total = 0.0;
    std::size_t epoch_steps = 0;

    for (std::size_t begin = 0; begin < order.size(); begin += bs, ++step) {
      const std::span<const std::size_t> idx(order.data() + begin, std::min(bs, order.size() - begin));
      std::vector<std::size_t> targets;
      for (std::size_t i : idx) targets.push_back(train_set.targets[i]);

      try {
        Tape tape;
        MoeModel live = model.on_tape(tape);
        ForwardResult fr = model_forward(batch_rows(train_set, idx), idx, config.training_routing(step), live);

        StepMetrics sm;
        sm.step = step;
        sm.epoch = epoch;
        Tensor ce = cross_entropy(fr.logits, targets);
        Tensor lb_sum, hr_sum;
        std::size_t selected = 0;
        for (std::size_t l = 0; l < n_layers; ++l) {
          Tensor lb = load_balance_loss(fr.router_probs[l], fr.records[l], n_real, config.lb_coeff);
          Tensor hr = hr_loss(fr.router_probs[l]);
          sm.lb_per_layer.push_back(lb.item());
          sm.hr_per_layer.push_back(hr.item());
          lb_sum = l == 0 ? lb : add(lb_sum, lb);
          hr_sum = l == 0 ? hr : add(hr_sum, hr);
          for (const auto& r : fr.records[l]) {
            selected += r.selected.size();
            cooc[l].add(r);
          }
        }
        const double inv_layers = 1.0 / static_cast<double>(n_layers);
        Tensor lb_mean = scale(lb_sum, inv_layers);
        Tensor hr_mean = scale(hr_sum, inv_layers);
        Tensor total = total_loss(ce, lb_mean, hr_mean, lambda);

        sm.ce = ce.item();
        sm.lb = lb_mean.item();
        sm.hr = hr_mean.item();
        sm.total = total.item();
        sm.mean_k = static_cast<double>(selected) / static_cast<double>(idx.size() * n_layers);
        sm.invocations = fr.invocations;
        if (!std::isfinite(sm.total)) throw TrainingDiverged(step, "non-finite loss at step " + std::to_string(step));

        tape.backward(total);
        std::vector<std::vector<double>> grads;
        for (const auto& [name, t] : live.named_parameters()) {
          Tensor g = tape.grad(*t);
          for (double v : g.data()) {
            if (!std::isfinite(v)) {
              throw TrainingDiverged(step, "non-finite gradient for " + name + " at step " + std::to_string(step));
            }
          }
          grads.push_back(g.values());
        }
        opt.step(model, grads);

        result.total_invocations += fr.invocations;
        epoch_total += sm.total;
        ++epoch_steps;
        if (metrics_file) metrics_file << to_jsonl(sm);
        result.metrics.push_back(std::move(sm));
      } catch (const DomainError& e) {
        throw TrainingDiverged(step, std::string(e.what()) + " at step " + std::to_string(step));
      }
    }

    result.epoch_mean_total.push_back(epoch_total / static_cast<double>(epoch_steps));
    result.final_epoch_cooc.clear();
    for (const auto& c : cooc) result.final_epoch_cooc.push_back(c.normalized());
    if (options.output_dir) {
      const auto dir = *options.output_dir;
      save_checkpoint(dir / ("epoch" + std::to_string(epoch + 1)), model, config, epoch + 1);
      for (const auto& m : result.final_epoch_cooc) {
        io::atomic_write(dir / ("train_cooc_epoch" + std::to_string(epoch + 1) + "_layer" + std::to_string(m.layer) + ".json"),
                         to_json(m));
      }
    }
  }
  if (options.output_dir) save_checkpoint(*options.output_dir / "final", model, config, config.optimizer.epochs);
  return result;
}

}  // namespace emoe
