// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <set>
#include <vector>

#include "e2egrec/graph_store.hpp"
#include "e2egrec/rng.hpp"

namespace e2eg::testing {

/// Random log over at most `max_users` users and `max_items` items.
inline InteractionLog random_log(Rng& rng, std::size_t max_users, std::size_t max_items) {
  InteractionLog log;
  const std::size_t users = 2 + rng.below(max_users - 1);
  for (std::size_t u = 0; u < users; ++u) {
    const std::size_t k = 1 + rng.below(6);
    for (std::size_t t = 0; t < k; ++t)
      log.records.push_back({static_cast<std::int64_t>(u), static_cast<std::int64_t>(rng.below(max_items)),
                             rng.uniform(0.0, 60.0), 0, false});
  }
  return log;
}

/// Swing weights by direct enumeration of every item pair and every
/// unordered user pair, without pruning.
inline std::vector<std::vector<double>> brute_force_swing(const InteractionLog& log, double alpha,
                                                          std::size_t num_items) {
  std::vector<std::set<std::int64_t>> sets;
  for (const auto& r : log.records) {
    if (sets.size() <= static_cast<std::size_t>(r.user_id)) sets.resize(r.user_id + 1);
    sets[r.user_id].insert(r.item_id);
  }
  std::vector<std::vector<double>> s(num_items, std::vector<double>(num_items, 0.0));
  for (std::size_t i = 0; i < num_items; ++i)
    for (std::size_t j = 0; j < num_items; ++j) {
      if (i == j) continue;
      for (std::size_t u = 0; u < sets.size(); ++u)
        for (std::size_t v = u + 1; v < sets.size(); ++v) {
          const auto& a = sets[u];
          const auto& b = sets[v];
          if (!a.count(i) || !a.count(j) || !b.count(i) || !b.count(j)) continue;
          std::size_t common = 0;
          for (auto x : a) common += b.count(x);
          s[i][j] += 1.0 / std::sqrt(double(a.size())) / std::sqrt(double(b.size())) / (alpha + double(common));
        }
    }
  return s;
}

}  // namespace e2eg::testing
