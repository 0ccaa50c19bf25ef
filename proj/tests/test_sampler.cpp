// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "e2egrec/error.hpp"
#include "e2egrec/sampler.hpp"
#include "sampler_oracle.hpp"

using namespace e2eg;
using e2eg::testing::star_graph;

TEST_CASE("neighbor probability examples") {
  const auto p0 = neighbor_probs(0, star_graph({0.3, 5.0, 1.0, 2.0}), 0.0);
  for (double p : p0) CHECK(p == doctest::Approx(0.25));
  const auto p1 = neighbor_probs(0, star_graph({1.0, 3.0}), 1.0);
  CHECK(p1[0] == doctest::Approx(0.25));
  CHECK(p1[1] == doctest::Approx(0.75));
  const auto p2 = neighbor_probs(0, star_graph({1.0, 2.0, 3.0}), 2.0);
  CHECK(p2[0] == doctest::Approx(1.0 / 14));
  CHECK(p2[1] == doctest::Approx(4.0 / 14));
  CHECK(p2[2] == doctest::Approx(9.0 / 14));
}

TEST_CASE("isolated source yields a single-node subgraph") {
  ItemGraph g;
  g.num_items = 3;
  g.row_offsets = {0, 0, 0, 0};
  Rng rng(1);
  const std::uint64_t src = 1;
  const auto sub = sample_subgraph({&src, 1}, g, SamplerConfig::one_hop(), rng);
  CHECK(sub.num_nodes() == 1);
  CHECK(sub.num_sources == 1);
  CHECK(sub.edges.empty());
  CHECK_THROWS_AS(neighbor_probs(1, g, 1.0), Error);
}

TEST_CASE("fanout at least the degree takes the exact neighborhood") {
  const auto g = star_graph({1.0, 2.0, 3.0, 4.0});
  Rng rng(2);
  const std::uint64_t src = 0;
  const auto sub = sample_subgraph({&src, 1}, g, SamplerConfig{{10}, 1.0, 0}, rng);
  CHECK(sub.num_nodes() == 5);
  CHECK(sub.edges.size() == 8);  // both directions
  for (const auto& e : sub.edges) CHECK(e.weight == g.weight(sub.nodes[e.src], sub.nodes[e.dst]));
}

TEST_CASE("heavy neighbor frequency converges") {
  const auto g = star_graph({1.0, 3.0});
  Rng rng(3);
  const std::uint64_t src = 0;
  std::size_t heavy = 0;
  const std::size_t n = 100000;
  for (std::size_t t = 0; t < n; ++t) heavy += sample_subgraph({&src, 1}, g, SamplerConfig{{1}, 1.0, 0}, rng).nodes[1] == 2;
  CHECK(std::abs(double(heavy) / n - 0.75) <= 0.01);
}

TEST_CASE("sampling is deterministic for a fixed seed") {
  const auto g = star_graph({1.0, 2.0, 0.5, 4.0, 1.5});
  const std::uint64_t src[] = {0, 3};
  Rng a(9), b(9);
  const auto s1 = sample_subgraph(src, g, SamplerConfig::two_hop(), a);
  const auto s2 = sample_subgraph(src, g, SamplerConfig::two_hop(), b);
  CHECK(s1.nodes == s2.nodes);
  CHECK(s1.hop == s2.hop);
  REQUIRE(s1.edges.size() == s2.edges.size());
  for (std::size_t i = 0; i < s1.edges.size(); ++i) {
    CHECK(s1.edges[i].src == s2.edges[i].src);
    CHECK(s1.edges[i].weight == s2.edges[i].weight);
  }
}

TEST_CASE("chi-square fit on a small weight vector") {
  for (double beta : {0.0, 1.0}) {
    const auto r = e2eg::testing::sampler_chi_square({0.5, 1.0, 2.5}, beta, 20000, 17);
    CHECK(r.pass());
  }
}
