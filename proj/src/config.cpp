// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/config.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "emoe/errors.hpp"
#include "emoe/io.hpp"

namespace emoe {

namespace {

// Step key for the sampled reference routing used by diagnostics; far outside
// any training step count.
constexpr std::uint64_t kDiagnosticStep = 0xD1A6'0000'0000ULL;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"run", {"mode", "output_dir"}},
      {"model", {"d", "d_hidden", "n_layers", "n_experts"}},
      {"elastic", {"k_train", "k_ideal", "sampling"}},
      {"loss", {"lambda", "lb_coeff"}},
      {"baselines", {"top_p", "n_null", "k_nominal"}},
      {"optimizer", {"kind", "learning_rate", "batch_size", "epochs", "beta1", "beta2", "eps"}},
      {"seeds", {"init", "data", "sampling"}},
      {"task", {"n_clusters", "d", "n_classes", "train_size", "eval_size", "noise", "center_scale"}},
  };
  return keys;
}

std::string unquote(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  s = s.substr(b, e - b + 1);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

template <class T>
T parse_value(const std::string& key, const std::string& raw) {
  std::istringstream is(unquote(raw));
  if constexpr (std::is_same_v<T, bool>) {
    const std::string v = unquote(raw);
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError("config key " + key + ": expected a boolean, got '" + v + "'");
  } else if constexpr (std::is_same_v<T, std::string>) {
    return unquote(raw);
  } else {
    if constexpr (std::is_unsigned_v<T>) {
      if (unquote(raw).starts_with("-")) throw ConfigError("config key " + key + ": must be non-negative");
    }
    T v{};
    is >> v;
    if (!is || !is.eof()) throw ConfigError("config key " + key + ": cannot parse '" + unquote(raw) + "'");
    return v;
  }
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::kTopK: return "topk";
    case RunMode::kEmoe: return "emoe";
    case RunMode::kTopP: return "topp";
    case RunMode::kAdaMoe: return "adamoe";
  }
  return "unknown";
}

RunMode parse_mode(const std::string& s) {
  if (s == "topk") return RunMode::kTopK;
  if (s == "emoe") return RunMode::kEmoe;
  if (s == "topp") return RunMode::kTopP;
  if (s == "adamoe") return RunMode::kAdaMoe;
  throw ConfigError("unknown mode '" + s + "' (expected topk, emoe, topp or adamoe)");
}

void RunConfig::validate() const {
  model_shape().validate();
  elastic.validate(n_experts);
  TopPConfig{top_p}.validate();
  adamoe.validate(n_experts);
  if (!std::isfinite(lambda) || !std::isfinite(lb_coeff) || lb_coeff < 0.0) {
    throw ConfigError("loss coefficients must be finite (lb_coeff >= 0)");
  }
  if (optimizer.kind != "sgd" && optimizer.kind != "adam") throw ConfigError("optimizer kind must be sgd or adam");
  if (!(optimizer.learning_rate > 0.0) || optimizer.batch_size < 1 || optimizer.epochs < 1) {
    throw ConfigError("optimizer needs learning_rate > 0, batch_size >= 1, epochs >= 1");
  }
  if (task.n_clusters < 1 || task.train_size < 1 || task.eval_size < 1 || task.d < 1 || task.n_classes < 2) {
    throw ConfigError("task sizes must be positive (at least two classes)");
  }
  if ((task.train_size + task.eval_size) % task.n_clusters != 0) {
    throw ConfigError("train_size + eval_size must be a multiple of n_clusters");
  }
  if (!(task.noise >= 0.0)) throw ConfigError("task noise must be >= 0");
}

ModelShape RunConfig::model_shape() const {
  ModelShape s;
  s.d_in = task.d;
  s.d = d;
  s.d_hidden = d_hidden;
  s.n_layers = n_layers;
  s.n_experts = n_experts;
  s.n_classes = task.n_classes;
  s.n_null = mode == RunMode::kAdaMoe ? adamoe.null_slots(n_experts) : 0;
  return s;
}

double RunConfig::effective_lambda() const { return mode == RunMode::kEmoe ? lambda : 0.0; }

RoutingMode RunConfig::training_routing(std::uint64_t step) const {
  switch (mode) {
    case RunMode::kTopK: return TopKRouting{elastic.k_train};
    case RunMode::kEmoe: return EmoeRouting{elastic, seeds.sampling, step};
    case RunMode::kTopP: return TopPRouting{top_p};
    case RunMode::kAdaMoe: return AdaMoeRouting{adamoe.k_nominal};
  }
  throw ConfigError("unknown mode");
}

RoutingMode RunConfig::reference_routing() const { return training_routing(kDiagnosticStep); }

void RunConfig::set_all_seeds(std::uint64_t seed) { seeds = SeedConfig{seed, seed, seed}; }

RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree pt;
  std::istringstream is(text);
  try {
    boost::property_tree::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  RunConfig c;
  const auto& keys = known_keys();
  for (const auto& [section, body] : pt) {
    auto it = keys.find(section);
    if (it == keys.end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) throw ConfigError("unknown config key " + section + "." + key);
      const std::string raw = value.get_value<std::string>();
      const std::string full = section + "." + key;
      if (section == "run") {
        if (key == "mode") c.mode = parse_mode(unquote(raw));
        else c.output_dir = parse_value<std::string>(full, raw);
      } else if (section == "model") {
        const auto v = parse_value<std::size_t>(full, raw);
        if (key == "d") c.d = v;
        else if (key == "d_hidden") c.d_hidden = v;
        else if (key == "n_layers") c.n_layers = v;
        else c.n_experts = v;
      } else if (section == "elastic") {
        if (key == "sampling") c.elastic.sampling_enabled = parse_value<bool>(full, raw);
        else if (key == "k_train") c.elastic.k_train = parse_value<std::size_t>(full, raw);
        else c.elastic.k_ideal = parse_value<std::size_t>(full, raw);
      } else if (section == "loss") {
        (key == "lambda" ? c.lambda : c.lb_coeff) = parse_value<double>(full, raw);
      } else if (section == "baselines") {
        if (key == "top_p") c.top_p = parse_value<double>(full, raw);
        else if (key == "n_null") c.adamoe.n_null = parse_value<std::size_t>(full, raw);
        else c.adamoe.k_nominal = parse_value<std::size_t>(full, raw);
      } else if (section == "optimizer") {
        if (key == "kind") c.optimizer.kind = parse_value<std::string>(full, raw);
        else if (key == "learning_rate") c.optimizer.learning_rate = parse_value<double>(full, raw);
        else if (key == "batch_size") c.optimizer.batch_size = parse_value<std::size_t>(full, raw);
        else if (key == "epochs") c.optimizer.epochs = parse_value<std::size_t>(full, raw);
        else if (key == "beta1") c.optimizer.beta1 = parse_value<double>(full, raw);
        else if (key == "beta2") c.optimizer.beta2 = parse_value<double>(full, raw);
        else c.optimizer.adam_eps = parse_value<double>(full, raw);
      } else if (section == "seeds") {
        const auto v = parse_value<std::uint64_t>(full, raw);
        if (key == "init") c.seeds.init = v;
        else if (key == "data") c.seeds.data = v;
        else c.seeds.sampling = v;
      } else if (section == "task") {
        if (key == "noise") c.task.noise = parse_value<double>(full, raw);
        else if (key == "center_scale") c.task.center_scale = parse_value<double>(full, raw);
        else {
          const auto v = parse_value<std::size_t>(full, raw);
          if (key == "n_clusters") c.task.n_clusters = v;
          else if (key == "d") c.task.d = v;
          else if (key == "n_classes") c.task.n_classes = v;
          else if (key == "train_size") c.task.train_size = v;
          else c.task.eval_size = v;
        }
      }
    }
  }
  c.source_text = text;
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

std::string to_config_text(const RunConfig& c) {
  std::ostringstream os;
  os << "[run]\nmode = " << mode_name(c.mode) << "\noutput_dir = " << c.output_dir << "\n\n";
  os << "[model]\nd = " << c.d << "\nd_hidden = " << c.d_hidden << "\nn_layers = " << c.n_layers
     << "\nn_experts = " << c.n_experts << "\n\n";
  os << "[elastic]\nk_train = " << c.elastic.k_train << "\nk_ideal = " << c.elastic.k_ideal
     << "\nsampling = " << (c.elastic.sampling_enabled ? "true" : "false") << "\n\n";
  os << "[loss]\nlambda = " << fmt_double(c.lambda) << "\nlb_coeff = " << fmt_double(c.lb_coeff) << "\n\n";
  os << "[baselines]\ntop_p = " << fmt_double(c.top_p) << "\nn_null = " << c.adamoe.n_null
     << "\nk_nominal = " << c.adamoe.k_nominal << "\n\n";
  os << "[optimizer]\nkind = " << c.optimizer.kind << "\nlearning_rate = " << fmt_double(c.optimizer.learning_rate)
     << "\nbatch_size = " << c.optimizer.batch_size << "\nepochs = " << c.optimizer.epochs
     << "\nbeta1 = " << fmt_double(c.optimizer.beta1) << "\nbeta2 = " << fmt_double(c.optimizer.beta2)
     << "\neps = " << fmt_double(c.optimizer.adam_eps) << "\n\n";
  os << "[seeds]\ninit = " << c.seeds.init << "\ndata = " << c.seeds.data << "\nsampling = " << c.seeds.sampling
     << "\n\n";
  os << "[task]\nn_clusters = " << c.task.n_clusters << "\nd = " << c.task.d << "\nn_classes = " << c.task.n_classes
     << "\ntrain_size = " << c.task.train_size << "\neval_size = " << c.task.eval_size
     << "\nnoise = " << fmt_double(c.task.noise) << "\ncenter_scale = " << fmt_double(c.task.center_scale) << "\n";
  return os.str();
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["mode"] = mode_name(c.mode);
  j["output_dir"] = c.output_dir;
  j["model"] = {{"d", c.d}, {"d_hidden", c.d_hidden}, {"n_layers", c.n_layers}, {"n_experts", c.n_experts}};
  j["elastic"] = {{"k_train", c.elastic.k_train}, {"k_ideal", c.elastic.k_ideal}, {"sampling", c.elastic.sampling_enabled}};
  j["loss"] = {{"lambda", c.lambda}, {"lb_coeff", c.lb_coeff}};
  j["baselines"] = {{"top_p", c.top_p}, {"n_null", c.adamoe.n_null}, {"k_nominal", c.adamoe.k_nominal}};
  j["optimizer"] = {{"kind", c.optimizer.kind},   {"learning_rate", c.optimizer.learning_rate},
                    {"batch_size", c.optimizer.batch_size}, {"epochs", c.optimizer.epochs},
                    {"beta1", c.optimizer.beta1}, {"beta2", c.optimizer.beta2},
                    {"eps", c.optimizer.adam_eps}};
  j["seeds"] = {{"init", c.seeds.init}, {"data", c.seeds.data}, {"sampling", c.seeds.sampling}};
  j["task"] = {{"n_clusters", c.task.n_clusters}, {"d", c.task.d},
               {"n_classes", c.task.n_classes},   {"train_size", c.task.train_size},
               {"eval_size", c.task.eval_size},   {"noise", c.task.noise},
               {"center_scale", c.task.center_scale}};
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.output_dir = j.at("output_dir").get<std::string>();
  const auto& m = j.at("model");
  c.d = m.at("d");
  c.d_hidden = m.at("d_hidden");
  c.n_layers = m.at("n_layers");
  c.n_experts = m.at("n_experts");
  const auto& e = j.at("elastic");
  c.elastic = ElasticConfig{e.at("k_train"), e.at("k_ideal"), e.at("sampling")};
  c.lambda = j.at("loss").at("lambda");
  c.lb_coeff = j.at("loss").at("lb_coeff");
  const auto& b = j.at("baselines");
  c.top_p = b.at("top_p");
  c.adamoe = AdaMoeConfig{b.at("n_null"), b.at("k_nominal")};
  const auto& o = j.at("optimizer");
  c.optimizer = OptimizerConfig{o.at("kind"), o.at("learning_rate"), o.at("batch_size"), o.at("epochs"),
                                o.at("beta1"), o.at("beta2"), o.at("eps")};
  const auto& s = j.at("seeds");
  c.seeds = SeedConfig{s.at("init"), s.at("data"), s.at("sampling")};
  const auto& t = j.at("task");
  c.task = TaskConfig{t.at("n_clusters"), t.at("d"),     t.at("n_classes"),   t.at("train_size"),
                      t.at("eval_size"),  t.at("noise"), t.at("center_scale")};
  c.validate();
  return c;
}

std::pair<Dataset, Dataset> make_task_data(const TaskConfig& task, std::uint64_t seed) {
  const std::size_t total = task.train_size + task.eval_size;
  ClusterTeacherParams p;
  p.n_clusters = task.n_clusters;
  p.d = task.d;
  p.n_classes = task.n_classes;
  p.m_per_cluster = total / task.n_clusters;
  p.noise = task.noise;
  p.center_scale = task.center_scale;
  p.seed = seed;
  const Dataset all = gen_cluster_teacher(p);
  return split(all, static_cast<double>(task.train_size) / static_cast<double>(total), seed);
}

}  // namespace emoe
