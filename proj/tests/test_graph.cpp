// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "e2egrec/error.hpp"
#include "e2egrec/graph_store.hpp"
#include "e2egrec/rng.hpp"
#include "swing_oracle.hpp"

using namespace e2eg;

namespace {

InteractionLog log_of(const std::vector<std::vector<std::int64_t>>& user_items) {
  InteractionLog log;
  for (std::size_t u = 0; u < user_items.size(); ++u)
    for (auto i : user_items[u]) log.records.push_back({static_cast<std::int64_t>(u), i, 10.0, 0, false});
  return log;
}

}  // namespace

TEST_CASE("swing score examples") {
  const auto two = log_of({{0, 1}, {0, 1}});
  CHECK(swing_score(0, 1, two, 1.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  const auto one = log_of({{0, 1}, {0}});
  CHECK(swing_score(0, 1, one, 1.0) == 0.0);
  CHECK_THROWS_AS(swing_score(0, 0, two, 1.0), Error);
}

TEST_CASE("no shared pairs gives an empty graph") {
  const auto g = build_swing_graph(log_of({{0, 1}, {2, 3}, {0, 4}}), 1.0, 10);
  CHECK(g.num_edges() == 0);
  CHECK(g.num_items == 5);
}

TEST_CASE("top_k pruning keeps the symmetrized union") {
  // s(0,1) = 1/2, s(0,2) = 1/6, s(1,2) = 1/(sqrt(6) * 3) ~ 0.136
  const auto log = log_of({{0, 1}, {0, 1}, {0, 1}, {0, 2}, {0, 2}, {1, 2}, {1, 2, 3}});
  const double ab = swing_score(0, 1, log, 1.0), ac = swing_score(0, 2, log, 1.0), bc = swing_score(1, 2, log, 1.0);
  REQUIRE(ab > ac);
  REQUIRE(ac > bc);
  REQUIRE(bc > 0.0);
  const auto g = build_swing_graph(log, 1.0, 1, 3 + 1);
  CHECK(g.weight(0, 1) == ab);
  CHECK(g.weight(1, 0) == ab);
  CHECK(g.weight(0, 2) == ac);
  CHECK(g.weight(1, 2) == 0.0);
  CHECK_THROWS_AS(build_swing_graph(log, 1.0, 0), Error);
}

TEST_CASE("built graph equals brute-force swing on random logs") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(seed);
    const auto log = e2eg::testing::random_log(rng, 50, 30);
    const std::uint64_t n = 30;
    const auto g = build_swing_graph(log, 1.0, 1000, n);
    g.validate();
    const auto brute = e2eg::testing::brute_force_swing(log, 1.0, n);
    double worst = 0.0;
    for (std::uint64_t i = 0; i < n; ++i)
      for (std::uint64_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(g.weight(i, j) - brute[i][j]));
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("graph save/load round trip and truncation") {
  Rng rng(5);
  const auto g = build_swing_graph(e2eg::testing::random_log(rng, 40, 20), 1.0, 5, 20);
  const auto bytes = encode_graph(g);
  CHECK(decode_graph(bytes) == g);

  const auto path = std::filesystem::temp_directory_path() / "e2egrec_graph_roundtrip.bin";
  save_graph(g, path);
  CHECK(load_graph(path) == g);
  std::filesystem::remove(path);

  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, bytes.size() / 2, bytes.size() - 1})
    CHECK_THROWS_AS(decode_graph(std::span(bytes.data(), cut)), ParseError);
  CHECK_THROWS_AS(load_graph("/nonexistent/e2egrec.bin"), Error);
}

TEST_CASE("interaction log tsv round trip") {
  InteractionLog log;
  log.action_names = {"like", "comment", "share"};
  log.records = {{0, 3, 12.5, 0b101, false}, {1, 2, 0.1, 0, true}};
  const auto path = std::filesystem::temp_directory_path() / "e2egrec_log_roundtrip.tsv";
  write_log_tsv(log, path);
  const auto back = read_log_tsv(path);
  std::filesystem::remove(path);
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[0].staytime == 12.5);
  CHECK(back.records[1].neg_action);
  const auto like = back.records[0].pos_actions;
  CHECK(__builtin_popcount(like) == 2);
}
