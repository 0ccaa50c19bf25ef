// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "e2egrec/graph_store.hpp"
#include "e2egrec/multitask.hpp"
#include "e2egrec/rank_model.hpp"
#include "e2egrec/sampler.hpp"

namespace e2eg {

// ---------------------------------------------------------------------------
// Modes

enum class TrainMode {
  kE2E,             ///< joint training, GradNorm on
  kCascaded,        ///< stage A: encoder on SSL; stage B: frozen encoder, head on LTR
  kE2ENoGradNorm,   ///< joint training, fixed task weights
  kCascadedNaive,   ///< one pass, SSL trains the encoder, LTR gradient stopped at the encoder output
};

enum class FusionMode { kGate, kAttn, kBothLevels, kBottomOnly };

TrainMode parse_train_mode(const std::string& s);
const char* train_mode_name(TrainMode m);
FusionMode parse_fusion_mode(const std::string& s);
const char* fusion_mode_name(FusionMode f);
/// Upper-level fusion used for a fusion mode (the bottom level is always gated).
UpperFusion upper_fusion_for(FusionMode f);

/// What the self-supervised loss reconstructs.
enum class SslTarget {
  kEmbedding,  ///< the detached input embedding rows
  kFeatures,   ///< a fixed item feature table (Stream::item_features)
};

SslTarget parse_ssl_target(const std::string& s);
const char* ssl_target_name(SslTarget t);

struct TrainConfig {
  ModelConfig model;
  SamplerConfig sampler{{10}, 1.0, 0};
  LabelConfig labels;
  GradNormConfig gradnorm;
  TrainMode mode = TrainMode::kE2E;
  FusionMode fusion = FusionMode::kAttn;
  SslTarget ssl_target = SslTarget::kEmbedding;
  double lr = 0.01;
  std::size_t batch_size = 64;
  std::size_t epochs_per_day = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Metrics

/// Mann-Whitney AUC with average ranks for ties. Throws
/// Error(kUndefinedAuc) when the labels hold a single class.
double auc(std::span<const double> scores, std::span<const double> labels);

struct DayMetrics {
  std::size_t day = 0;  ///< 1-based
  std::size_t examples = 0;
  double auc = 0.0;       ///< final score vs refined label
  double stay_auc = 0.0;  ///< stay tower vs staytime label
  double mean_ssl_loss = 0.0;
  double mean_ltr_loss = 0.0;
  double w_ssl = 1.0;  ///< task weights at the end of the day
  double w_ltr = 1.0;
};

struct StepRecord {
  std::size_t day = 0;
  std::size_t step = 0;
  double ssl_loss = 0.0;
  double ltr_loss = 0.0;
  double w_ssl = 1.0;
  double w_ltr = 1.0;
};

struct MetricReport {
  std::string mode;
  std::string fusion;
  std::string backbone;
  std::uint64_t seed = 0;
  double tau = 0.0;
  std::vector<DayMetrics> days;
  std::vector<StepRecord> steps;
  /// Largest |gradient| reaching frozen encoder parameters while the head
  /// trained (cascaded modes only; 0 otherwise).
  double frozen_grad_max = 0.0;

  double mean_auc() const;
  double mean_stay_auc() const;
};

/// Per-day relative lift (a - b) / b of mean AUC, paired by day.
std::vector<double> relative_lift(const MetricReport& a, const MetricReport& b);
double mean_relative_lift(const MetricReport& a, const MetricReport& b);

// ---------------------------------------------------------------------------
// Streaming training

/// Day-partitioned stream over a fixed item graph.
struct Stream {
  std::vector<InteractionLog> days;
  Tensor user_features;  ///< num_users x p
  Tensor item_features;  ///< num_items x d; required for SslTarget::kFeatures
  ItemGraph graph;
};

/// Progressive validation: each day is scored before it is trained on.
/// Dispatches kCascaded to run_cascaded_baseline.
MetricReport run_streaming_training(const Stream& stream, const TrainConfig& config);

/// Stage A trains encoder and embeddings on the SSL loss over the stream;
/// stage B freezes them and trains fusion and towers on the LTR loss with
/// the same evaluation protocol.
MetricReport run_cascaded_baseline(const Stream& stream, const TrainConfig& config);

/// Builds a model sized for the stream (input width from the user features,
/// upper fusion from the fusion mode).
ModelConfig model_config_for(const Stream& stream, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Gradient-coupling and subspace checks

struct CouplingReport {
  double e2e_encoder_grad_norm = 0.0;        ///< ||d L_rec / d(encoder, embeddings)||, joint
  double cascaded_encoder_grad_norm = 0.0;   ///< same with the stop-gradient inserted
  double head_grad_shift = 0.0;              ///< ||grad_psi L_rec(theta') - grad_psi L_rec(theta)||
  bool pass() const { return cascaded_encoder_grad_norm == 0.0 && e2e_encoder_grad_norm > 1e-6 && head_grad_shift > 1e-6; }
};

/// Random model and batch at a generic point; perturbs every encoder
/// parameter by `perturbation` for the coupling check.
CouplingReport coupling_check(const ModelConfig& config, std::uint64_t seed, double perturbation = 0.1);

struct SubspaceReport {
  double max_kernel_grad = 0.0;      ///< max_i ||P_ker(w^T) dL_BPR/dz_i||
  double bpr_relative_change = 0.0;  ///< |L(Z + dZ) - L(Z)| / |L(Z)| with rows of dZ in ker(w^T)
  double decoder_residual = 0.0;     ///< ||X - Z D*||_F / ||X||_F for the least-squares decoder D*
  double projection_residual = 0.0;  ///< ||X - P_col(Z) X||_F / ||X||_F
  bool pass() const {
    return max_kernel_grad <= 1e-10 && bpr_relative_change <= 1e-12 && decoder_residual <= 1e-8 &&
           projection_residual <= 1e-8;
  }
};

/// Z: n x k, w: k x 1 (nonzero), X: n x m. `rng_seed` drives the kernel perturbations.
SubspaceReport subspace_check(const Tensor& z, const Tensor& w, const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                              const Tensor& x, std::uint64_t rng_seed);

/// Random instance with Z = X R for an invertible R.
SubspaceReport subspace_check_random(std::uint64_t seed);

}  // namespace e2eg
