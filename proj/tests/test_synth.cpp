// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "e2egrec/error.hpp"
#include "e2egrec/synth.hpp"

using namespace e2eg;

namespace {

SynthConfig tiny(std::uint64_t seed = 1) {
  SynthConfig c;
  c.num_users = 150;
  c.num_items = 40;
  c.num_clusters = 4;
  c.days = 2;
  c.interactions_per_day = 800;
  c.seed = seed;
  return c;
}

bool same_log(const InteractionLog& a, const InteractionLog& b) {
  if (a.records.size() != b.records.size() || a.action_names != b.action_names) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto &x = a.records[i], &y = b.records[i];
    if (x.user_id != y.user_id || x.item_id != y.item_id || x.staytime != y.staytime ||
        x.pos_actions != y.pos_actions || x.neg_action != y.neg_action)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("same seed gives identical data; different seeds differ") {
  const auto a = generate(tiny(5)), b = generate(tiny(5)), c = generate(tiny(6));
  CHECK(same_log(a.history, b.history));
  CHECK(same_log(a.days[1], b.days[1]));
  CHECK(a.user_features == b.user_features);
  CHECK_FALSE(same_log(a.days[0], c.days[0]));
}

TEST_CASE("full affinity keeps users inside their preferred clusters") {
  auto cfg = tiny();
  cfg.affinity = 1.0;
  const auto data = generate(cfg);
  for (const auto* log : {&data.history, &data.days[0]})
    for (const auto& r : log->records) {
      const auto& prefs = data.user_prefs[r.user_id];
      CHECK(std::find(prefs.begin(), prefs.end(), data.item_cluster[r.item_id]) != prefs.end());
    }
}

TEST_CASE("clusters are balanced and the graph is cluster-concentrated") {
  const auto data = generate(tiny());
  std::vector<std::size_t> sizes(4, 0);
  for (auto c : data.item_cluster) ++sizes[c];
  for (auto s : sizes) CHECK(s == 10);
  const auto g = build_swing_graph(data.history, 1.0, 100, 40);
  const auto mass = cluster_mass(g, data.item_cluster);
  // 4 clusters of 10: 4 * 45 within-cluster pairs, 600 cross pairs.
  CHECK(mass.within / 180.0 > 2.0 * mass.cross / 600.0);

  auto one = tiny();
  one.num_clusters = 1;
  CHECK_NOTHROW(generate(one));
}

TEST_CASE("tau selection hits the closest base rate") {
  const auto data = generate(tiny());
  const double tau = select_tau(data.history, 0.5);
  const double rate = label_base_rate(data.history, tau);
  CHECK(std::abs(rate - 0.5) < 0.1);
  CHECK(label_base_rate(data.history, 1e9) < rate);
}

TEST_CASE("data directory round trip") {
  const auto data = generate(tiny());
  const auto dir = std::filesystem::temp_directory_path() / "e2egrec_synth_roundtrip";
  std::filesystem::remove_all(dir);
  write_synth(data, dir);
  const auto back = read_synth(dir);
  std::filesystem::remove_all(dir);
  CHECK(same_log(data.history, back.history));
  REQUIRE(back.days.size() == 2);
  CHECK(same_log(data.days[1], back.days[1]));
  CHECK(back.user_features.max_abs_diff(data.user_features) == 0.0);
  CHECK(back.item_features.max_abs_diff(data.item_features) == 0.0);
  CHECK_THROWS_AS(read_synth(dir), Error);
}

TEST_CASE("invalid synth config is rejected") {
  auto cfg = tiny();
  cfg.affinity = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = tiny();
  cfg.num_clusters = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
