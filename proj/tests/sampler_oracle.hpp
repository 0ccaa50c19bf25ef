// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <vector>

#include "e2egrec/graph_store.hpp"
#include "e2egrec/rng.hpp"
#include "e2egrec/sampler.hpp"

namespace e2eg::testing {

/// Star graph: item 0 linked to items 1..k with the given weights.
inline ItemGraph star_graph(const std::vector<double>& weights) {
  ItemGraph g;
  const std::size_t k = weights.size();
  g.num_items = k + 1;
  g.row_offsets = {0, k};
  for (std::size_t i = 0; i < k; ++i) {
    g.col_indices.push_back(i + 1);
    g.weights.push_back(weights[i]);
  }
  for (std::size_t i = 0; i < k; ++i) {
    g.col_indices.push_back(0);
    g.weights.push_back(weights[i]);
    g.row_offsets.push_back(g.col_indices.size());
  }
  return g;
}

struct ChiSquareResult {
  double statistic = 0.0;
  double critical = 0.0;
  bool pass() const { return statistic <= critical; }
};

/// Goodness of fit of `draws` single-neighbor samples from the center of a
/// star graph against w^beta / sum(w^beta), at significance `alpha`.
inline ChiSquareResult sampler_chi_square(const std::vector<double>& weights, double beta, std::size_t draws,
                                          std::uint64_t seed, double alpha = 0.001) {
  const ItemGraph g = star_graph(weights);
  SamplerConfig cfg{{1}, beta, seed};
  Rng rng(seed);
  std::vector<double> counts(weights.size(), 0.0);
  const std::uint64_t source = 0;
  for (std::size_t t = 0; t < draws; ++t) {
    const Subgraph sub = sample_subgraph({&source, 1}, g, cfg, rng);
    counts[sub.nodes.at(1) - 1] += 1.0;
  }
  double z = 0.0;
  for (double w : weights) z += std::pow(w, beta);
  ChiSquareResult r;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double expected = static_cast<double>(draws) * std::pow(weights[i], beta) / z;
    r.statistic += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  const boost::math::chi_squared dist(static_cast<double>(weights.size() - 1));
  r.critical = boost::math::quantile(boost::math::complement(dist, alpha));
  return r;
}

}  // namespace e2eg::testing
