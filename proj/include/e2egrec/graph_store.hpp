// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace e2eg {

struct Interaction {
  std::int64_t user_id = 0;
  std::int64_t item_id = 0;
  double staytime = 0.0;
  /// Bit k set iff the action named InteractionLog::action_names[k] occurred.
  std::uint32_t pos_actions = 0;
  bool neg_action = false;
};

/// Ordered interaction records plus the vocabulary of positive action names.
struct InteractionLog {
  std::vector<Interaction> records;
  std::vector<std::string> action_names;

  /// Bit index of `name`, adding it to the vocabulary if absent.
  std::uint32_t action_bit(const std::string& name);
  std::int64_t max_item_id() const;
  std::int64_t max_user_id() const;
};

/// Tab-separated text: header row, then user_id, item_id, staytime_seconds,
/// pos_actions (comma-joined names, may be empty), neg_action (0/1).
/// Action bits follow `vocabulary` first, then names in order of appearance.
InteractionLog read_log_tsv(const std::filesystem::path& path, const std::vector<std::string>& vocabulary = {});
void write_log_tsv(const InteractionLog& log, const std::filesystem::path& path);

/// Symmetric weighted item graph in CSR form. Neighbor lists are sorted by
/// item id, carry strictly positive weights, and contain no self-edges.
struct ItemGraph {
  std::uint64_t num_items = 0;
  std::vector<std::uint64_t> row_offsets{0};
  std::vector<std::uint64_t> col_indices;
  std::vector<double> weights;

  std::size_t num_edges() const noexcept { return col_indices.size(); }
  std::size_t degree(std::uint64_t item) const { return row_offsets.at(item + 1) - row_offsets.at(item); }
  std::span<const std::uint64_t> neighbors(std::uint64_t item) const;
  std::span<const double> neighbor_weights(std::uint64_t item) const;
  /// Edge weight or 0 when absent.
  double weight(std::uint64_t a, std::uint64_t b) const;

  /// Throws Error(kInvalidArgument) describing the first violated invariant.
  void validate() const;
  bool operator==(const ItemGraph&) const = default;
};

/// Deduplicated, sorted item set per user (index = user id).
std::vector<std::vector<std::int64_t>> user_item_sets(const InteractionLog& log);

/// Swing similarity: sum over unordered user pairs {u, v} that both
/// interacted with i and j of w_u * w_v / (alpha + |I_u & I_v|),
/// with w_u = 1 / sqrt(|I_u|).
double swing_score(std::int64_t i, std::int64_t j, const InteractionLog& log, double alpha);

/// All positive Swing scores via user-pair enumeration; each item keeps its
/// top_k strongest neighbors (ties to the lower id) and the kept directed
/// edges are symmetrized by union. `num_items` of 0 means max id + 1.
ItemGraph build_swing_graph(const InteractionLog& log, double alpha, std::size_t top_k, std::uint64_t num_items = 0);

/// Little-endian binary: "E2EG", u32 version, u64 num_items, u64 offsets
/// [num_items + 1], u64 indices [nnz], f64 weights [nnz].
void save_graph(const ItemGraph& graph, const std::filesystem::path& path);
ItemGraph load_graph(const std::filesystem::path& path);
std::vector<unsigned char> encode_graph(const ItemGraph& graph);
ItemGraph decode_graph(std::span<const unsigned char> bytes);

inline constexpr std::uint32_t kGraphFormatVersion = 1;

}  // namespace e2eg
