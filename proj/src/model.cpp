// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "emoe/model.hpp"

#include <cmath>
#include <sstream>

#include "emoe/errors.hpp"
#include "emoe/ops.hpp"
#include "emoe/rng.hpp"
#include "emoe/tape.hpp"

namespace emoe {

namespace {

Tensor gaussian(std::size_t rows, std::size_t cols, double stddev, RngStream& rng) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = stddev * rng.normal();
  return Tensor::matrix(rows, cols, std::move(v));
}

template <class... Ts>
struct Overloaded : Ts... { using Ts::operator()...; };
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

void ModelShape::validate() const {
  if (d_in < 1 || d < 1 || d_hidden < 1 || n_layers < 1 || n_classes < 2) {
    throw ConfigError("model sizes must be positive (and at least two classes)");
  }
  if (n_experts < 2) throw ConfigError("model needs at least two experts per block");
}

MoeModel::MoeModel(ModelShape shape, std::uint64_t init_seed) : shape_(shape) {
  shape_.validate();
  RngStream rng(init_seed, RngPurpose::kInit);
  w_in_ = gaussian(shape_.d_in, shape_.d, 1.0 / std::sqrt(static_cast<double>(shape_.d_in)), rng);
  b_in_ = Tensor::zeros({1, shape_.d});
  for (std::size_t l = 0; l < shape_.n_layers; ++l) {
    layers_.push_back(MoeLayer::random(shape_.d, shape_.d_hidden, shape_.n_experts, rng,
                                       shape_.n_experts + shape_.n_null));
  }
  w_out_ = gaussian(shape_.d, shape_.n_classes, 1.0 / std::sqrt(static_cast<double>(shape_.d)), rng);
  b_out_ = Tensor::zeros({1, shape_.n_classes});
}

std::vector<std::pair<std::string, const Tensor*>> MoeModel::named_parameters() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  auto mutable_list = const_cast<MoeModel*>(this)->named_parameters();
  out.reserve(mutable_list.size());
  for (auto& [name, t] : mutable_list) out.emplace_back(name, t);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> MoeModel::named_parameters() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("input.weight", &w_in_);
  out.emplace_back("input.bias", &b_in_);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string prefix = "moe" + std::to_string(l) + ".";
    out.emplace_back(prefix + "router", &layers_[l].router());
    for (std::size_t e = 0; e < layers_[l].n_experts(); ++e) {
      const std::string ep = prefix + "expert" + std::to_string(e) + ".";
      Expert& ex = layers_[l].expert(e);
      out.emplace_back(ep + "w1", &ex.w1);
      out.emplace_back(ep + "b1", &ex.b1);
      out.emplace_back(ep + "w2", &ex.w2);
      out.emplace_back(ep + "b2", &ex.b2);
    }
  }
  out.emplace_back("head.weight", &w_out_);
  out.emplace_back("head.bias", &b_out_);
  return out;
}

MoeModel MoeModel::on_tape(Tape& tape) const {
  MoeModel copy = *this;
  for (auto& [name, t] : copy.named_parameters()) *t = tape.leaf(*t);
  return copy;
}

std::size_t MoeModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_parameters()) n += t->size();
  return n;
}

std::string describe(const RoutingMode& mode) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const TopKRouting& m) { os << "topk(" << m.k << ")"; },
                 [&](const EmoeRouting& m) {
                   os << "emoe(k_train=" << m.elastic.k_train << ",k_ideal=" << m.elastic.k_ideal
                      << (m.elastic.sampling_enabled ? "" : ",no-coact") << ")";
                 },
                 [&](const TopPRouting& m) { os << "topp(" << m.p << ")"; },
                 [&](const AdaMoeRouting& m) { os << "adamoe(" << m.k_nominal << ")"; },
             },
             mode);
  return os.str();
}

Tensor moe_block_forward(const Tensor& h, std::size_t layer_index, const MoeLayer& layer,
                         std::span<const std::size_t> token_ids, const RoutingMode& mode,
                         std::vector<RoutingRecord>& records, Tensor& probs, std::uint64_t& invocations) {
  const std::size_t batch = h.rows();
  const std::size_t width = layer.router_width();
  const std::size_t n_real = layer.n_experts();
  if (token_ids.size() != batch) throw DimensionError("moe_block_forward: one token id per row required");

  const Tensor logits = router_logits(h, layer);
  probs = softmax_row(logits);

  // Flattened (token, slot) assignments in token-major, ascending-slot order.
  std::vector<std::size_t> a_row, a_col, seg_end;
  records.assign(batch, RoutingRecord{});
  for (std::size_t b = 0; b < batch; ++b) {
    const std::span<const double> row = logits.data().subspan(b * width, width);
    const std::span<const double> prow = probs.data().subspan(b * width, width);
    RoutingRecord& rec = records[b];
    rec.token_index = token_ids[b];
    rec.layer = layer_index;
    rec.full_probs.assign(prow.begin(), prow.end());
    std::vector<std::size_t> gating;
    std::visit(Overloaded{
                   [&](const TopKRouting& m) {
                     rec.pool = top_k_select(row.first(n_real), m.k);
                     gating = rec.pool;
                   },
                   [&](const EmoeRouting& m) {
                     const SamplingKey key{m.seed, m.step, token_ids[b], layer_index};
                     RoutingRecord r = emoe_route(row.first(n_real), m.elastic, key);
                     rec.pool = std::move(r.pool);
                     gating = std::move(r.selected);
                   },
                   [&](const TopPRouting& m) {
                     rec.pool = top_p_select(prow.first(n_real), m.p);
                     gating = rec.pool;
                   },
                   [&](const AdaMoeRouting& m) {
                     AdaMoeSelection s = adamoe_select(row, n_real, m.k_nominal);
                     rec.pool = s.gating;
                     gating = std::move(s.gating);
                   },
               },
               mode);
    for (std::size_t slot : gating) {
      a_row.push_back(b);
      a_col.push_back(slot);
    }
    seg_end.push_back(a_row.size());
  }

  const Tensor gate = segment_softmax(gather_elements(logits, a_row, a_col), seg_end);

  std::size_t begin = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    RoutingRecord& rec = records[b];
    for (std::size_t a = begin; a < seg_end[b]; ++a) {
      if (a_col[a] < n_real) {
        rec.selected.push_back(a_col[a]);
        rec.gate_weights.push_back(gate[a]);
      } else {
        ++rec.null_selected;
        rec.null_weight += gate[a];
      }
    }
    begin = seg_end[b];
  }

  Tensor out = Tensor::zeros({batch, layer.dim()});
  std::vector<std::vector<std::size_t>> by_expert(n_real);
  for (std::size_t a = 0; a < a_col.size(); ++a) {
    if (a_col[a] < n_real) by_expert[a_col[a]].push_back(a);
  }
  for (std::size_t e = 0; e < n_real; ++e) {
    const auto& ids = by_expert[e];
    if (ids.empty()) continue;
    std::vector<std::size_t> tokens(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) tokens[i] = a_row[ids[i]];
    const Tensor y = expert_forward(gather_rows(h, tokens), layer.expert(e));
    const Tensor w = gather_rows(gate, ids);
    out = add(out, scatter_add_rows(scale_rows(y, w), tokens, batch));
    invocations += ids.size();
  }
  return out;
}

ForwardResult model_forward(const Tensor& batch, std::span<const std::size_t> token_ids, const RoutingMode& mode,
                            const MoeModel& model) {
  const ModelShape& s = model.shape();
  if (batch.rank() != 2 || batch.cols() != s.d_in) {
    throw DimensionError("model_forward: batch " + shape_string(batch.shape()) + " vs input width " +
                         std::to_string(s.d_in));
  }
  std::visit(Overloaded{
                 [&](const TopKRouting& m) {
                   if (m.k < 1 || m.k > s.n_experts) throw ConfigError("topk routing: k out of range");
                 },
                 [&](const EmoeRouting& m) { m.elastic.validate(s.n_experts); },
                 [&](const TopPRouting& m) { TopPConfig{m.p}.validate(); },
                 [&](const AdaMoeRouting& m) {
                   if (m.k_nominal < 1 || m.k_nominal > s.n_experts + s.n_null) {
                     throw ConfigError("adamoe routing: k_nominal out of range");
                   }
                 },
             },
             mode);

  const auto params = model.named_parameters();
  const Tensor& w_in = *params[0].second;
  const Tensor& b_in = *params[1].second;
  const Tensor& w_out = *params[params.size() - 2].second;
  const Tensor& b_out = *params[params.size() - 1].second;

  ForwardResult result;
  Tensor h = add_row_bias(matmul(batch, w_in), b_in);
  result.records.resize(s.n_layers);
  result.router_probs.resize(s.n_layers);
  for (std::size_t l = 0; l < s.n_layers; ++l) {
    const Tensor y = moe_block_forward(h, l, model.layers()[l], token_ids, mode, result.records[l],
                                       result.router_probs[l], result.invocations);
    h = add(h, y);
  }
  result.logits = add_row_bias(matmul(h, w_out), b_out);
  return result;
}

}  // namespace emoe
