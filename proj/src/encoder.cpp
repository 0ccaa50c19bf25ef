// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2egrec/encoder.hpp"

#include <cmath>

#include "e2egrec/error.hpp"

namespace e2eg {

Backbone parse_backbone(const std::string& s) {
  if (s == "lightgcn") return Backbone::kLightGcn;
  if (s == "sage") return Backbone::kSage;
  throw Error(ErrorCode::kConfig, "unknown backbone '" + s + "' (expected lightgcn|sage)");
}

const char* backbone_name(Backbone b) { return b == Backbone::kLightGcn ? "lightgcn" : "sage"; }

namespace {

std::vector<std::size_t> local_degrees(const Subgraph& sub) {
  std::vector<std::size_t> deg(sub.num_nodes(), 0);
  for (const auto& e : sub.edges) ++deg[e.src];
  return deg;
}

SparseMatrix build_csr(const Subgraph& sub, const std::vector<double>& row_scale, bool symmetric_norm) {
  const std::size_t n = sub.num_nodes();
  const auto deg = local_degrees(sub);
  SparseMatrix m;
  m.rows = m.cols = n;
  m.offsets.assign(n + 1, 0);
  for (const auto& e : sub.edges) ++m.offsets[e.src + 1];
  for (std::size_t i = 0; i < n; ++i) m.offsets[i + 1] += m.offsets[i];
  m.indices.resize(sub.edges.size());
  m.values.resize(sub.edges.size());
  std::vector<std::size_t> cursor(m.offsets.begin(), m.offsets.end() - 1);
  for (const auto& e : sub.edges) {
    const std::size_t k = cursor[e.src]++;
    m.indices[k] = e.dst;
    m.values[k] = symmetric_norm ? 1.0 / (std::sqrt(static_cast<double>(deg[e.src])) *
                                          std::sqrt(static_cast<double>(deg[e.dst])))
                                 : row_scale[e.src];
  }
  return m;
}

}  // namespace

SparseMatrix normalized_adjacency(const Subgraph& sub) { return build_csr(sub, {}, true); }

SparseMatrix neighbor_mean_matrix(const Subgraph& sub) {
  const auto deg = local_degrees(sub);
  std::vector<double> inv(deg.size());
  for (std::size_t i = 0; i < deg.size(); ++i) inv[i] = deg[i] ? 1.0 / static_cast<double>(deg[i]) : 0.0;
  return build_csr(sub, inv, false);
}

Tensor init_embedding(std::size_t num_items, std::size_t dim, Rng& rng) {
  Tensor t({num_items, dim});
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

Var lightgcn_forward(std::shared_ptr<const SparseMatrix> adj, Var h0, std::size_t layers) {
  require(layers >= 1, "lightgcn needs at least one layer");
  std::vector<Var> hs{h0};
  for (std::size_t l = 0; l < layers; ++l) hs.push_back(ops::spmm(adj, hs.back()));
  return ops::weighted_sum(hs, std::vector<double>(hs.size(), 1.0 / static_cast<double>(layers + 1)));
}

Var lightgcn_forward(const Subgraph& sub, Var h0, std::size_t layers) {
  return lightgcn_forward(std::make_shared<const SparseMatrix>(normalized_adjacency(sub)), h0, layers);
}

Var sage_forward(const Subgraph& sub, Var h0, const std::vector<Var>& weights) {
  require(!weights.empty(), "sage needs at least one layer");
  auto mean = std::make_shared<const SparseMatrix>(neighbor_mean_matrix(sub));
  Var h = h0;
  for (const Var& w : weights) {
    const std::size_t d_in = h.shape()[1];
    if (w.shape().size() != 2 || w.shape()[0] != 2 * d_in)
      throw ShapeError("sage layer weight " + shape_str(w.shape()) + " does not match input width " +
                       std::to_string(d_in) + " (expected 2*d_in rows)");
    Var nbr = ops::spmm(mean, h);
    h = ops::relu(ops::matmul(ops::concat_cols({h, nbr}), w));
  }
  return h;
}

Encoder::Encoder(const EncoderConfig& config, std::size_t num_items, ParameterSet& params, Rng& rng)
    : config_(config) {
  require(config.layers >= 1 && config.dim >= 1, "encoder needs layers >= 1 and dim >= 1");
  table_ = &params.add("embedding", init_embedding(num_items, config.dim, rng));
  if (config.backbone == Backbone::kSage) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(2 * config.dim));
    for (std::size_t l = 0; l < config.layers; ++l) {
      Tensor w({2 * config.dim, config.dim});
      for (auto& v : w.data()) v = rng.uniform(-bound, bound);
      sage_w_.push_back(&params.add("sage.W" + std::to_string(l), std::move(w)));
    }
  }
}

Encoder::Output Encoder::forward(ComputeGraph& g, const Subgraph& sub) const {
  std::vector<std::size_t> rows(sub.nodes.begin(), sub.nodes.end());
  Var h0 = ops::gather_rows(g.parameter(*table_), std::move(rows));
  if (config_.backbone == Backbone::kLightGcn) return {h0, lightgcn_forward(sub, h0, config_.layers)};
  std::vector<Var> ws;
  for (auto* p : sage_w_) ws.push_back(g.parameter(*p));
  return {h0, sage_forward(sub, h0, ws)};
}

std::vector<Parameter*> Encoder::parameters() const {
  std::vector<Parameter*> out{table_};
  out.insert(out.end(), sage_w_.begin(), sage_w_.end());
  return out;
}

}  // namespace e2eg
