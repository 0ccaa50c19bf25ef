// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2egrec/multitask.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

#include "e2egrec/error.hpp"

namespace e2eg {

void GradNormConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::kConfig, "gradnorm.gamma must be >= 0");
  if (!(lr_w >= 0.0) || !std::isfinite(lr_w)) throw Error(ErrorCode::kConfig, "gradnorm.lr_w must be >= 0");
  if (warmup_steps == 0) throw Error(ErrorCode::kConfig, "gradnorm.warmup_steps must be >= 1");
  for (double v : initial)
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::kConfig, "initial task weights must be positive");
}

double restricted_norm(const Tensor& grad, std::size_t rows) {
  if (grad.numel() == 0) return 0.0;
  const std::size_t width = grad.rank() >= 2 ? grad.cols() : 1;
  const std::size_t total_rows = grad.numel() / width;
  const std::size_t n = std::min(rows, total_rows) * width;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += grad.data()[i] * grad.data()[i];
  return std::sqrt(s);
}

double grad_norm(ComputeGraph& g, Var theta_s, Var weighted_loss, std::size_t rows) {
  if (!g.requires_grad(weighted_loss)) return 0.0;
  g.backward(weighted_loss, /*accumulate_params=*/false);
  return restricted_norm(g.grad(theta_s), rows);
}

std::vector<double> relative_rates(std::span<const double> losses, std::span<const double> initial) {
  require(losses.size() == initial.size() && !losses.empty(), "relative_rates: task count mismatch");
  std::vector<double> ratio(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) {
    double l0 = initial[i];
    if (!(l0 > 0.0)) {
      std::cerr << "warning: initial loss of task " << i << " is " << l0 << "; clamped to " << kMinInitialLoss
                << "\n";
      l0 = kMinInitialLoss;
    }
    ratio[i] = losses[i] / l0;
  }
  const double mean = std::accumulate(ratio.begin(), ratio.end(), 0.0) / static_cast<double>(ratio.size());
  if (!(mean > 0.0)) return std::vector<double>(ratio.size(), 1.0);
  for (auto& v : ratio) v /= mean;
  return ratio;
}

double gradnorm_meta_loss(std::span<const double> g, std::span<const double> r, double gamma) {
  require(g.size() == r.size() && !g.empty(), "gradnorm_meta_loss: task count mismatch");
  const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += std::abs(g[i] - mean * std::pow(r[i], gamma));
  return s;
}

std::vector<double> gradnorm_meta_gradient(std::span<const double> g, std::span<const double> w,
                                           std::span<const double> r, double gamma) {
  require(g.size() == r.size() && g.size() == w.size() && !g.empty(), "gradnorm_meta_gradient: task count mismatch");
  const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double diff = g[i] - mean * std::pow(r[i], gamma);
    const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    out[i] = sign * g[i] / w[i];
  }
  return out;
}

void renormalize_weights(std::span<double> w, double total) {
  require(!w.empty(), "renormalize_weights: no weights");
  double s = 0.0;
  for (auto& v : w) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNumeric, "task weight became non-finite");
    v = std::max(v, kMinTaskWeight);
    s += v;
  }
  for (auto& v : w) v *= total / s;
}

MultiTaskOptimizer::MultiTaskOptimizer(const GradNormConfig& config, double lr) : config_(config), lr_(lr) {
  config_.validate();
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error(ErrorCode::kConfig, "learning rate must be >= 0");
  weights_.w = config_.initial;
  if (config_.enabled) renormalize_weights(weights_.w);
}

double MultiTaskOptimizer::update_weights(const std::array<double, kNumTasks>& losses,
                                          const std::array<double, kNumTasks>& raw_norms) {
  // Fold this step into L_i(0) while inside the warm-up window.
  if (weights_.observed < config_.warmup_steps) {
    const double k = static_cast<double>(weights_.observed);
    for (std::size_t i = 0; i < kNumTasks; ++i)
      weights_.initial_losses[i] = (weights_.initial_losses[i] * k + losses[i]) / (k + 1.0);
    ++weights_.observed;
  }
  std::array<double, kNumTasks> g{};
  for (std::size_t i = 0; i < kNumTasks; ++i) g[i] = weights_.w[i] * raw_norms[i];
  const auto r = relative_rates(losses, weights_.initial_losses);
  const double meta = gradnorm_meta_loss(g, r, config_.gamma);
  if (!config_.enabled) return meta;
  const auto grad = gradnorm_meta_gradient(g, weights_.w, r, config_.gamma);
  for (std::size_t i = 0; i < kNumTasks; ++i) weights_.w[i] -= config_.lr_w * grad[i];
  renormalize_weights(weights_.w);
  return meta;
}

namespace {

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "non-finite " << what << " loss (" << v << "); step aborted";
    throw Error(ErrorCode::kNumeric, os.str());
  }
}

void sgd(std::span<Parameter* const> trainable, double lr) {
  for (Parameter* p : trainable) {
    if (!p->grad.all_finite()) throw Error(ErrorCode::kNumeric, "non-finite gradient for '" + p->name + "'");
    p->value.axpy(-lr, p->grad);
  }
}

}  // namespace

MultiTaskOptimizer::StepStats MultiTaskOptimizer::step(ComputeGraph& g, Var ssl_loss, Var ltr_loss, Var theta_s,
                                                       std::size_t shared_rows,
                                                       std::span<Parameter* const> trainable, ParameterSet& params) {
  StepStats st;
  st.losses = {ssl_loss.value().item(), ltr_loss.value().item()};
  check_finite(st.losses[kTaskSsl], "self-supervised");
  check_finite(st.losses[kTaskLtr], "ranking");

  // Per-task backward passes; the total gradient is their weighted sum, so
  // each pass also yields that task's shared-parameter gradient.
  std::array<double, kNumTasks> raw{};
  std::vector<Tensor> ssl_grads;
  ssl_grads.reserve(trainable.size());
  params.zero_grad();
  if (g.requires_grad(ssl_loss)) {
    g.backward(ssl_loss);
    raw[kTaskSsl] = restricted_norm(g.grad(theta_s), shared_rows);
  }
  for (Parameter* p : trainable) ssl_grads.push_back(p->grad);
  params.zero_grad();
  if (g.requires_grad(ltr_loss)) {
    g.backward(ltr_loss);
    raw[kTaskLtr] = restricted_norm(g.grad(theta_s), shared_rows);
  }
  const auto w = weights_.w;
  for (std::size_t k = 0; k < trainable.size(); ++k) {
    Tensor& grad = trainable[k]->grad;
    for (auto& v : grad.data()) v *= w[kTaskLtr];
    grad.axpy(w[kTaskSsl], ssl_grads[k]);
  }
  for (std::size_t i = 0; i < kNumTasks; ++i) st.shared_norms[i] = w[i] * raw[i];
  sgd(trainable, lr_);
  st.meta_loss = update_weights(st.losses, raw);
  st.weights = weights_.w;
  return st;
}

double MultiTaskOptimizer::step_single(ComputeGraph& g, Var loss, std::span<Parameter* const> trainable,
                                       ParameterSet& params) {
  const double v = loss.value().item();
  check_finite(v, "training");
  params.zero_grad();
  if (g.requires_grad(loss)) g.backward(loss);
  sgd(trainable, lr_);
  return v;
}

}  // namespace e2eg
