// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2egrec/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "e2egrec/error.hpp"

namespace e2eg {

void SamplerConfig::validate() const {
  require(!fanouts.empty(), "sampler needs at least one hop");
  for (auto f : fanouts) require(f > 0, "sampler fanouts must be positive");
  require(beta >= 0.0 && std::isfinite(beta), "sampler beta must be a finite value >= 0");
}

std::size_t Subgraph::local_index(std::uint64_t item) const {
  const auto it = std::find(nodes.begin(), nodes.end(), item);
  return static_cast<std::size_t>(it - nodes.begin());
}

std::vector<double> neighbor_probs(std::uint64_t item, const ItemGraph& graph, double beta) {
  require(item < graph.num_items, "item id out of range");
  const auto w = graph.neighbor_weights(item);
  if (w.empty()) throw Error(ErrorCode::kInvalidArgument, "item " + std::to_string(item) + " has no neighbors");
  // Normalize by the largest weight before exponentiating so large beta
  // cannot overflow.
  const double wmax = *std::max_element(w.begin(), w.end());
  std::vector<double> p(w.size());
  double total = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) total += (p[k] = std::pow(w[k] / wmax, beta));
  for (auto& v : p) v /= total;
  return p;
}

std::vector<std::size_t> sample_without_replacement(std::span<const double> probs, std::size_t count, Rng& rng) {
  std::vector<std::size_t> out;
  if (count >= probs.size()) {
    out.resize(probs.size());
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  std::vector<double> remaining(probs.begin(), probs.end());
  double mass = std::accumulate(remaining.begin(), remaining.end(), 0.0);
  for (std::size_t draw = 0; draw < count; ++draw) {
    const double target = rng.uniform() * mass;
    double acc = 0.0;
    std::size_t pick = remaining.size();
    std::size_t last_live = remaining.size();
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      if (remaining[k] <= 0.0) continue;
      last_live = k;
      acc += remaining[k];
      if (target < acc) {
        pick = k;
        break;
      }
    }
    if (pick == remaining.size()) pick = last_live;  // rounding at the tail
    if (pick == remaining.size()) break;             // all remaining mass is zero
    out.push_back(pick);
    mass -= remaining[pick];
    remaining[pick] = 0.0;
    if (mass <= 0.0) mass = std::accumulate(remaining.begin(), remaining.end(), 0.0);
  }
  return out;
}

Subgraph sample_subgraph(std::span<const std::uint64_t> sources, const ItemGraph& graph, const SamplerConfig& config,
                         Rng& rng) {
  config.validate();
  require(!sources.empty(), "sample_subgraph needs at least one source");
  Subgraph sub;
  std::unordered_map<std::uint64_t, std::size_t> local;
  auto add_node = [&](std::uint64_t item, std::size_t hop) -> std::pair<std::size_t, bool> {
    auto [it, inserted] = local.emplace(item, sub.nodes.size());
    if (inserted) {
      sub.nodes.push_back(item);
      sub.hop.push_back(hop);
    }
    return {it->second, inserted};
  };
  std::vector<std::size_t> frontier;
  for (auto s : sources) {
    if (s >= graph.num_items) throw Error(ErrorCode::kInvalidArgument, "unknown source item " + std::to_string(s));
    auto [idx, fresh] = add_node(s, 0);
    if (fresh) frontier.push_back(idx);
  }
  sub.num_sources = sub.nodes.size();

  std::set<std::pair<std::size_t, std::size_t>> seen_edges;
  for (std::size_t hop = 0; hop < config.hops(); ++hop) {
    std::vector<std::size_t> next;
    for (auto u : frontier) {
      const std::uint64_t item = sub.nodes[u];
      if (graph.degree(item) == 0) continue;
      const auto nbrs = graph.neighbors(item);
      const auto wts = graph.neighbor_weights(item);
      std::vector<std::size_t> picks;
      if (config.fanouts[hop] >= nbrs.size()) {
        picks.resize(nbrs.size());
        std::iota(picks.begin(), picks.end(), std::size_t{0});
      } else {
        const auto probs = neighbor_probs(item, graph, config.beta);
        picks = sample_without_replacement(probs, config.fanouts[hop], rng);
      }
      for (auto k : picks) {
        auto [v, fresh] = add_node(nbrs[k], hop + 1);
        if (fresh) next.push_back(v);
        const auto key = std::minmax(u, v);
        if (seen_edges.insert(key).second) {
          sub.edges.push_back({u, v, wts[k]});
          sub.edges.push_back({v, u, wts[k]});
        }
      }
    }
    frontier = std::move(next);
  }
  return sub;
}

}  // namespace e2eg
