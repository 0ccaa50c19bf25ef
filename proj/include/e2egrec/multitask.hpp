// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "e2egrec/autograd.hpp"

namespace e2eg {

/// Number of balanced tasks (self-supervised reconstruction and ranking).
inline constexpr std::size_t kNumTasks = 2;
/// Task weights are renormalised to sum to the task count.
inline constexpr double kWeightSum = static_cast<double>(kNumTasks);
/// Lower clamp applied to every weight before renormalisation.
inline constexpr double kMinTaskWeight = 1e-4;
/// Floor for a recorded initial loss of zero.
inline constexpr double kMinInitialLoss = 1e-8;

enum Task : std::size_t { kTaskSsl = 0, kTaskLtr = 1 };

struct GradNormConfig {
  bool enabled = true;        ///< false: weights stay at their initial values
  double gamma = 1.0;         ///< restoring exponent
  double lr_w = 0.025;        ///< weight learning rate
  std::size_t warmup_steps = 1;  ///< steps averaged into L_i(0); 1 = first step only
  std::array<double, kNumTasks> initial{1.0, 1.0};

  void validate() const;
};

/// Current task weights and the recorded initial losses.
struct TaskWeights {
  std::array<double, kNumTasks> w{1.0, 1.0};
  std::array<double, kNumTasks> initial_losses{0.0, 0.0};
  std::size_t observed = 0;  ///< steps folded into initial_losses

  double sum() const noexcept { return w[0] + w[1]; }
};

/// L2 norm of `grad` restricted to its first `rows` rows (all rows if `rows`
/// exceeds the row count).
double restricted_norm(const Tensor& grad, std::size_t rows);

/// G = ||d(weighted_loss)/d(theta_s)|| over the first `rows` rows of theta_s.
/// Runs a probe backward pass that leaves parameter gradients untouched.
/// Returns 0 when theta_s does not influence the loss.
double grad_norm(ComputeGraph& g, Var theta_s, Var weighted_loss, std::size_t rows);

/// r_i = (L_i(t)/L_i(0)) / mean_j(L_j(t)/L_j(0)). Zero initial losses are
/// clamped to kMinInitialLoss with a warning on stderr.
std::vector<double> relative_rates(std::span<const double> losses, std::span<const double> initial);

/// sum_i |G_i - mean(G) * r_i^gamma|.
double gradnorm_meta_loss(std::span<const double> g, std::span<const double> r, double gamma);

/// d(meta loss)/d(w_i) with mean(G) and r detached:
/// sign(G_i - mean(G) r_i^gamma) * G_i / w_i.
std::vector<double> gradnorm_meta_gradient(std::span<const double> g, std::span<const double> w,
                                           std::span<const double> r, double gamma);

/// Clamp every weight to >= kMinTaskWeight, then rescale to sum to `total`.
void renormalize_weights(std::span<double> w, double total = kWeightSum);

/// Plain SGD on model parameters plus GradNorm on the two task weights,
/// updated in parallel from the same batch.
class MultiTaskOptimizer {
 public:
  MultiTaskOptimizer(const GradNormConfig& config, double lr);

  struct StepStats {
    std::array<double, kNumTasks> losses{};
    std::array<double, kNumTasks> shared_norms{};  ///< G_i = w_i * ||grad_theta_s L_i||, pre-update weights
    std::array<double, kNumTasks> weights{};        ///< after the update
    double meta_loss = 0.0;
  };

  /// Both losses must live in `g`. `theta_s` is the gathered input-embedding
  /// node whose first `shared_rows` rows are the batch source rows. Only
  /// `trainable` parameters are updated; all gradients in `params` are
  /// overwritten. Throws Error(kNumeric) on a non-finite loss, leaving
  /// parameters and weights untouched.
  StepStats step(ComputeGraph& g, Var ssl_loss, Var ltr_loss, Var theta_s, std::size_t shared_rows,
                 std::span<Parameter* const> trainable, ParameterSet& params);

  /// Single-loss SGD step (used by staged baselines).
  double step_single(ComputeGraph& g, Var loss, std::span<Parameter* const> trainable, ParameterSet& params);

  const TaskWeights& weights() const noexcept { return weights_; }
  TaskWeights& weights() noexcept { return weights_; }
  const GradNormConfig& config() const noexcept { return config_; }
  double lr() const noexcept { return lr_; }

  /// GradNorm weight update from already-computed per-task quantities.
  /// `raw_norms` are the unweighted shared-parameter gradient norms.
  /// Returns the meta loss at the pre-update weights.
  double update_weights(const std::array<double, kNumTasks>& losses,
                        const std::array<double, kNumTasks>& raw_norms);

 private:
  GradNormConfig config_;
  double lr_;
  TaskWeights weights_;
};

}  // namespace e2eg
