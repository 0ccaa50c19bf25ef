// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "e2egrec/autograd.hpp"
#include "e2egrec/encoder.hpp"
#include "e2egrec/fusion.hpp"
#include "e2egrec/graph_store.hpp"
#include "e2egrec/rng.hpp"
#include "e2egrec/sampler.hpp"

namespace e2eg {

// ---------------------------------------------------------------------------
// Labels

struct LabelConfig {
  double tau = 30.0;
  /// Names of actions that count as positive feedback.
  std::vector<std::string> positive_actions{"like", "comment", "share"};
  double clip_lo = 0.0;
  double clip_hi = 1.0;

  void validate() const;
  /// Bitmask over `log.action_names` of the configured positive actions.
  std::uint32_t positive_mask(const InteractionLog& log) const;
};

struct Labels {
  double refined = 0.0;   ///< y = clip(y0 + interact)
  double staytime = 0.0;  ///< y0 = [staytime > tau]
};

/// y0 = [staytime > tau]; interact = #positive actions - neg; y = clip(y0 + interact).
Labels make_label(double staytime, std::uint32_t pos_actions, bool neg_action, const LabelConfig& cfg,
                  std::uint32_t positive_mask = ~0u);

// ---------------------------------------------------------------------------
// Towers and head

/// Fully connected stack with ReLU between layers. The last layer is
/// linear unless `relu_last` is set.
struct Tower {
  std::vector<Parameter*> weights;
  std::vector<Parameter*> biases;
  bool relu_last = false;

  static Tower create(ParameterSet& params, const std::string& prefix, const std::vector<std::size_t>& widths,
                      Rng& rng, bool relu_last = false);
  Var forward(ComputeGraph& g, Var x) const;
  std::size_t in_width() const { return weights.front()->value.rows(); }
  std::size_t out_width() const { return weights.back()->value.cols(); }
};

enum class UpperFusion { kAttn, kGate, kNone };

UpperFusion parse_upper_fusion(const std::string& s);
const char* upper_fusion_name(UpperFusion f);

struct ScoreWeights {
  double reward = 0.5;
  double stay = 0.5;
  void validate() const;
};

struct RankConfig {
  std::size_t input_dim = 8;  ///< width of F_in
  std::size_t gnn_dim = 16;   ///< width of F_gnn
  std::size_t token_dim = 16; ///< common token width d
  std::vector<std::size_t> shared_hidden{32, 16};
  std::vector<std::size_t> task_hidden{16};
  std::size_t heads = 2;
  UpperFusion upper = UpperFusion::kAttn;
  ScoreWeights score;
};

struct RankOutput {
  Var final_logits;   ///< N x 1
  Var reward_logits;  ///< N x 1
  Var stay_logits;    ///< N x 1
  Var shared;         ///< shared tower output
};

/// Bottom gate over [F_in, F_gnn] -> shared tower -> upper fusion over the
/// {F_shared, F_ltr, F_gnn} tokens -> reward and stay towers.
class RankHead {
 public:
  RankHead(const RankConfig& config, ParameterSet& params, Rng& rng);

  RankOutput forward(ComputeGraph& g, Var f_in, Var f_gnn) const;

  const RankConfig& config() const noexcept { return config_; }
  std::vector<Parameter*> parameters() const;
  Tower& reward_tower() { return reward_; }
  Tower& stay_tower() { return stay_; }
  Tower& shared_tower() { return shared_; }

 private:
  RankConfig config_;
  std::vector<Parameter*> params_;
  GateParams bottom_gate_;
  Tower shared_;
  Parameter* ltr_proj_ = nullptr;
  Parameter* proj_shared_ = nullptr;
  Parameter* proj_ltr_ = nullptr;
  Parameter* proj_gnn_ = nullptr;
  GateParams upper_gate_;
  AttnParams upper_attn_;
  Tower reward_;
  Tower stay_;
};

// ---------------------------------------------------------------------------
// Losses

/// Mean BCE of sigmoid(logits) against labels.
Var bce_with_logits(Var logits, const Tensor& labels);

/// BCE(reward, y) + BCE(stay, y0).
Var ltr_loss(const RankOutput& out, const Tensor& refined, const Tensor& staytime);

/// sum over pairs of softplus(-w^T (z_i - z_j)); z rows of Z (n x k), w of shape k x 1.
Var bpr_loss(Var z, Var w, const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

// ---------------------------------------------------------------------------
// Composed model

struct ModelConfig {
  EncoderConfig encoder;
  RankConfig rank;
};

/// One training/eval batch. Row r pairs user features with item items[r].
struct Batch {
  Tensor user_features;  ///< N x input_dim
  std::vector<std::uint64_t> items;
  Tensor labels;       ///< refined y, N
  Tensor stay_labels;  ///< y0, N
  std::size_t size() const noexcept { return items.size(); }
};

/// Unique items of a batch in order of first appearance, and the row -> source index map.
std::pair<std::vector<std::uint64_t>, std::vector<std::size_t>> batch_sources(const Batch& batch);

/// Rows of `table` for the subgraph nodes (a constant reconstruction target).
Tensor gather_target(const Tensor& table, const Subgraph& sub);

enum class GnnCoupling {
  kJoint,     ///< rank loss gradients reach the encoder
  kDetached,  ///< stop-gradient between encoder output and the rank head
};

class E2EModel {
 public:
  E2EModel(const ModelConfig& config, std::size_t num_items, Rng& rng);
  E2EModel(const E2EModel&) = delete;
  E2EModel& operator=(const E2EModel&) = delete;

  struct Forward {
    Var h0;
    Var y;
    Var ssl_loss;
    Var ltr_loss;
    RankOutput rank;
    std::size_t num_sources = 0;
  };

  /// `sub` must have been sampled from batch_sources(batch).first. The
  /// reconstruction target is the detached input embedding rows unless
  /// `ssl_target_table` (num_items x dim) is given, in which case its rows
  /// for the subgraph nodes are used as a constant target.
  Forward forward(ComputeGraph& g, const Subgraph& sub, const Batch& batch, GnnCoupling coupling,
                  const Tensor* ssl_target_table = nullptr) const;

  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }
  const Encoder& encoder() const noexcept { return *encoder_; }
  const RankHead& head() const noexcept { return *head_; }
  RankHead& head() noexcept { return *head_; }
  const ModelConfig& config() const noexcept { return config_; }

 private:
  ModelConfig config_;
  ParameterSet params_;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<RankHead> head_;
};

}  // namespace e2eg
