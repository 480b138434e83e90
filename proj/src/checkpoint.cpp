// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/checkpoint.hpp"

#include <algorithm>

#include "emoe/errors.hpp"
#include "emoe/io.hpp"

namespace emoe {

namespace {
constexpr const char* kFormat = "emoe-checkpoint-v1";
}

std::string weights_blob(const MoeModel& model) {
  std::vector<double> flat;
  flat.reserve(model.parameter_count());
  for (const auto& [name, t] : model.named_parameters()) flat.insert(flat.end(), t->data().begin(), t->data().end());
  return io::encode_f64_le(flat);
}

std::string manifest_hash(nlohmann::json manifest) {
  manifest.erase("manifest_sha256");
  return io::sha256_hex(manifest.dump());
}

nlohmann::json build_manifest(const MoeModel& model, const RunConfig& config, std::size_t epoch,
                              const std::string& weights_sha256) {
  nlohmann::json m;
  m["format"] = kFormat;
  m["epoch"] = epoch;
  m["config"] = to_json(config);
  m["config_text"] = config.source_text.empty() ? to_config_text(config) : config.source_text;
  m["seeds"] = {{"init", config.seeds.init}, {"data", config.seeds.data}, {"sampling", config.seeds.sampling}};
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : model.named_parameters()) {
    tensors.push_back({{"name", name}, {"shape", t->shape()}, {"offset", offset}});
    offset += t->size();
  }
  m["tensors"] = std::move(tensors);
  m["n_values"] = offset;
  m["weights_sha256"] = weights_sha256;
  m["manifest_sha256"] = manifest_hash(m);
  return m;
}

void save_checkpoint(const std::filesystem::path& dir, const MoeModel& model, const RunConfig& config,
                     std::size_t epoch) {
  const std::string blob = weights_blob(model);
  const nlohmann::json manifest = build_manifest(model, config, epoch, io::sha256_hex(blob));
  io::atomic_write(dir / "weights.bin", blob);
  io::atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json manifest = nlohmann::json::parse(io::read_file(dir / "manifest.json"));
  if (manifest.value("format", "") != kFormat) throw ConfigError("unrecognised checkpoint format in " + dir.string());
  if (manifest_hash(manifest) != manifest.at("manifest_sha256").get<std::string>()) {
    throw DomainError("checkpoint manifest hash mismatch in " + dir.string());
  }
  const std::string blob = io::read_file(dir / "weights.bin");
  if (io::sha256_hex(blob) != manifest.at("weights_sha256").get<std::string>()) {
    throw DomainError("checkpoint weights hash mismatch in " + dir.string());
  }
  RunConfig config = config_from_json(manifest.at("config"));
  config.source_text = manifest.at("config_text").get<std::string>();
  MoeModel model(config.model_shape(), config.seeds.init);
  const std::vector<double> flat = io::decode_f64_le(blob);

  auto params = model.named_parameters();
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != params.size()) throw DimensionError("checkpoint tensor count does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& entry = tensors[i];
    if (entry.at("name").get<std::string>() != params[i].first ||
        entry.at("shape").get<Shape>() != params[i].second->shape()) {
      throw DimensionError("checkpoint tensor " + entry.at("name").get<std::string>() + " does not match the model");
    }
    const auto offset = entry.at("offset").get<std::size_t>();
    const std::size_t n = params[i].second->size();
    if (offset + n > flat.size()) throw DimensionError("checkpoint weights are truncated");
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), n, params[i].second->mutable_data().begin());
  }
  return Checkpoint{std::move(config), std::move(model), manifest.at("epoch").get<std::size_t>(), std::move(manifest)};
}

}  // namespace emoe
