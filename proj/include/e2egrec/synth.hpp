// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "e2egrec/graph_store.hpp"
#include "e2egrec/tensor.hpp"

namespace e2eg {

/// Planted-cluster interaction generator. Items are split into clusters,
/// each user prefers one or two of them, and in-preference interactions get
/// longer staytimes and more positive actions.
struct SynthConfig {
  std::size_t num_users = 2000;
  std::size_t num_items = 500;
  std::size_t num_clusters = 8;
  double affinity = 0.7;                ///< P(interaction falls in a preferred cluster)
  double second_pref_prob = 0.5;        ///< P(user prefers a second cluster)
  std::size_t history_per_user = 12;    ///< pre-stream interactions used to build the item graph
  std::size_t days = 6;
  std::size_t interactions_per_day = 20000;
  double staytime_median_pref = 40.0;   ///< seconds
  double staytime_median_other = 12.0;  ///< seconds
  double staytime_sigma = 0.5;          ///< log-space spread
  double action_prob_pref = 0.08;       ///< per positive action
  double action_prob_other = 0.02;
  double neg_prob_pref = 0.02;
  double neg_prob_other = 0.15;
  std::size_t user_feature_dim = 8;
  std::size_t item_feature_dim = 16;
  double item_feature_noise = 1.0;  ///< std of Gaussian noise on the item cluster-indicator features
  double feature_noise = 0.3;  ///< std of Gaussian noise on the user preference features
  std::uint64_t seed = 1;

  void validate() const;
};

/// Action vocabulary written by the generator, in bit order.
const std::vector<std::string>& synth_action_names();

struct SynthData {
  InteractionLog history;           ///< graph-building interactions
  std::vector<InteractionLog> days; ///< the training/evaluation stream
  Tensor user_features;             ///< num_users x user_feature_dim
  Tensor item_features;             ///< num_items x item_feature_dim (content stand-in)
  std::vector<std::uint32_t> item_cluster;
  std::vector<std::vector<std::uint32_t>> user_prefs;
};

SynthData generate(const SynthConfig& cfg);

/// Staytime threshold whose refined-label base rate over `log` is closest to
/// `target` (ties to the smaller threshold). Candidates are midpoints between
/// consecutive distinct staytimes.
double select_tau(const InteractionLog& log, double target, std::uint32_t positive_mask = ~0u);

/// Fraction of refined labels equal to 1 at threshold `tau`.
double label_base_rate(const InteractionLog& log, double tau, std::uint32_t positive_mask = ~0u);

/// Directory layout: history.tsv, day_<d>.tsv (1-based), user_features.tsv,
/// item_features.tsv, item_clusters.tsv.
void write_synth(const SynthData& data, const std::filesystem::path& dir);
SynthData read_synth(const std::filesystem::path& dir);

/// Within-cluster and cross-cluster edge weight mass of `graph`.
struct ClusterMass {
  double within = 0.0;
  double cross = 0.0;
};
/// Dense feature table: header "<id_name>\tf0\tf1...", then one row per id 0..n-1.
void write_feature_table(const Tensor& table, const std::string& id_name, const std::filesystem::path& path);
Tensor read_feature_table(const std::filesystem::path& path, const std::string& id_name);

ClusterMass cluster_mass(const ItemGraph& graph, const std::vector<std::uint32_t>& item_cluster);

}  // namespace e2eg
