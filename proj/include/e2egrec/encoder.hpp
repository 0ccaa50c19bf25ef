// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "e2egrec/autograd.hpp"
#include "e2egrec/rng.hpp"
#include "e2egrec/sampler.hpp"

namespace e2eg {

enum class Backbone { kLightGcn, kSage };

Backbone parse_backbone(const std::string& s);
const char* backbone_name(Backbone b);

struct EncoderConfig {
  Backbone backbone = Backbone::kLightGcn;
  std::size_t layers = 1;
  std::size_t dim = 16;
};

/// Symmetric degree normalization over subgraph-local degrees:
/// entry (u, v) = 1 / (sqrt(deg u) sqrt(deg v)) per edge, no self-loops.
SparseMatrix normalized_adjacency(const Subgraph& sub);

/// Row-normalized adjacency: row u averages u's in-subgraph neighbors.
/// Degree-0 rows are empty (zero neighbor mean).
SparseMatrix neighbor_mean_matrix(const Subgraph& sub);

/// Uniform in [-1/sqrt(dim), 1/sqrt(dim)].
Tensor init_embedding(std::size_t num_items, std::size_t dim, Rng& rng);

/// H^(l+1) = A_hat H^(l); returns the mean of H^(0..L).
Var lightgcn_forward(const Subgraph& sub, Var h0, std::size_t layers);
/// Same propagation with a precomputed normalized adjacency.
Var lightgcn_forward(std::shared_ptr<const SparseMatrix> adj, Var h0, std::size_t layers);

/// Per layer: relu(concat(h_u, mean_{v in N(u)} h_v) * W^(l)), with W^(l)
/// of shape (2 d_in x d_out).
Var sage_forward(const Subgraph& sub, Var h0, const std::vector<Var>& weights);

/// Encoder parameters registered in a ParameterSet: the embedding table
/// ("embedding") plus, for GraphSAGE, "sage.W<l>".
class Encoder {
 public:
  Encoder(const EncoderConfig& config, std::size_t num_items, ParameterSet& params, Rng& rng);

  struct Output {
    Var h0;  ///< gathered input rows, one per local node
    Var y;   ///< node representations
  };
  Output forward(ComputeGraph& g, const Subgraph& sub) const;

  const EncoderConfig& config() const noexcept { return config_; }
  Parameter& table() const noexcept { return *table_; }
  const std::vector<Parameter*>& layer_weights() const noexcept { return sage_w_; }
  /// Embedding table plus any layer weights.
  std::vector<Parameter*> parameters() const;

 private:
  EncoderConfig config_;
  Parameter* table_;
  std::vector<Parameter*> sage_w_;
};

}  // namespace e2eg
