// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "e2egrec/graph_store.hpp"
#include "e2egrec/rng.hpp"

namespace e2eg {

struct SamplerConfig {
  /// fanouts[l] neighbors are drawn per frontier node at hop l; the hop
  /// count is fanouts.size().
  std::vector<std::size_t> fanouts{100};
  double beta = 1.0;
  std::uint64_t seed = 0;

  std::size_t hops() const noexcept { return fanouts.size(); }
  void validate() const;

  static SamplerConfig one_hop() { return SamplerConfig{{100}, 1.0, 0}; }
  static SamplerConfig two_hop() { return SamplerConfig{{25, 15}, 1.0, 0}; }
};

struct SubgraphEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  double weight = 0.0;
};

/// A sampled neighborhood. Local node k maps to global item nodes[k]; the
/// first num_sources local nodes are the (deduplicated) sources in order of
/// first appearance. Edges are stored in both directions.
struct Subgraph {
  std::vector<std::uint64_t> nodes;
  std::size_t num_sources = 0;
  std::vector<SubgraphEdge> edges;
  /// Hop at which each local node was first reached (0 for sources).
  std::vector<std::size_t> hop;

  std::size_t num_nodes() const noexcept { return nodes.size(); }
  /// Local index of `item`, or num_nodes() if absent.
  std::size_t local_index(std::uint64_t item) const;
};

/// p(u -> v) = w_uv^beta / sum_k w_uk^beta over the neighbors of u, in
/// neighbor-list order. Throws Error(kInvalidArgument) for an isolated node.
std::vector<double> neighbor_probs(std::uint64_t item, const ItemGraph& graph, double beta);

/// Draws `count` distinct indices from `probs` by sequential renormalized
/// draws without replacement. Returns all indices when count >= size.
std::vector<std::size_t> sample_without_replacement(std::span<const double> probs, std::size_t count, Rng& rng);

/// Multi-hop temperature-weighted importance sampling. Nodes are
/// deduplicated globally (first arrival wins) and only newly reached nodes
/// are expanded at the next hop.
Subgraph sample_subgraph(std::span<const std::uint64_t> sources, const ItemGraph& graph, const SamplerConfig& config,
                         Rng& rng);

}  // namespace e2eg
