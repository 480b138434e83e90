// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "emoe/config.hpp"
#include "emoe/model.hpp"

namespace emoe {

/// A checkpoint directory holds `manifest.json` (tensor names, shapes and
/// offsets, config snapshot, seeds, epoch, hashes) and `weights.bin`, the
/// parameters as little-endian doubles concatenated in manifest order.
struct Checkpoint {
  RunConfig config;
  MoeModel model;
  std::size_t epoch = 0;
  nlohmann::json manifest;
};

nlohmann::json build_manifest(const MoeModel& model, const RunConfig& config, std::size_t epoch,
                              const std::string& weights_sha256);
std::string weights_blob(const MoeModel& model);

void save_checkpoint(const std::filesystem::path& dir, const MoeModel& model, const RunConfig& config,
                     std::size_t epoch);

/// Verifies the manifest hash and the weights hash before rebuilding the model.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// SHA-256 of the manifest serialised without its own "manifest_sha256" entry.
std::string manifest_hash(nlohmann::json manifest);

}  // namespace emoe
