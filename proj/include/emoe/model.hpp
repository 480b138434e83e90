// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "emoe/baselines.hpp"
#include "emoe/elastic.hpp"
#include "emoe/moe.hpp"
#include "emoe/tensor.hpp"

namespace emoe {

class Tape;

struct ModelShape {
  std::size_t d_in = 16;       // input features
  std::size_t d = 16;          // residual width
  std::size_t d_hidden = 32;   // expert hidden width
  std::size_t n_layers = 3;    // MoE blocks
  std::size_t n_experts = 16;  // real experts per block
  std::size_t n_classes = 8;
  std::size_t n_null = 0;      // extra router columns (AdaMoE)

  void validate() const;
};

/// linear-in -> L residual MoE blocks -> linear classifier.
class MoeModel {
 public:
  MoeModel(ModelShape shape, std::uint64_t init_seed);

  const ModelShape& shape() const noexcept { return shape_; }
  const std::vector<MoeLayer>& layers() const noexcept { return layers_; }
  std::vector<MoeLayer>& layers() noexcept { return layers_; }

  /// Stable (name, tensor) listing; the checkpoint order.
  std::vector<std::pair<std::string, const Tensor*>> named_parameters() const;
  std::vector<std::pair<std::string, Tensor*>> named_parameters();

  /// Copy whose parameters are leaves on `tape`.
  MoeModel on_tape(Tape& tape) const;

  std::size_t parameter_count() const;

 private:
  ModelShape shape_;
  Tensor w_in_, b_in_;
  std::vector<MoeLayer> layers_;
  Tensor w_out_, b_out_;
};

struct TopKRouting { std::size_t k = 2; };
struct EmoeRouting {
  ElasticConfig elastic;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
};
struct TopPRouting { double p = 0.15; };
struct AdaMoeRouting { std::size_t k_nominal = 2; };

using RoutingMode = std::variant<TopKRouting, EmoeRouting, TopPRouting, AdaMoeRouting>;

std::string describe(const RoutingMode& mode);

struct ForwardResult {
  Tensor logits;                         // [B x C]
  std::vector<Tensor> router_probs;      // per layer [B x width], softmax of all router logits
  std::vector<std::vector<RoutingRecord>> records;  // [layer][token]
  std::uint64_t invocations = 0;         // expert evaluations, all layers
};

/// Full forward pass for a batch. `token_ids[b]` names row b for keyed
/// sampling and in the routing records; it must be stable across epochs so
/// EMoE draws do not depend on batch composition.
ForwardResult model_forward(const Tensor& batch, std::span<const std::size_t> token_ids,
                            const RoutingMode& mode, const MoeModel& model);

/// One MoE block on a batch: returns the block output [B x d] (without the
/// residual) and fills `records` / `probs`.
Tensor moe_block_forward(const Tensor& h, std::size_t layer_index, const MoeLayer& layer,
                         std::span<const std::size_t> token_ids, const RoutingMode& mode,
                         std::vector<RoutingRecord>& records, Tensor& probs, std::uint64_t& invocations);

}  // namespace emoe
