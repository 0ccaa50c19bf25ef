// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2egrec/rank_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

#include "e2egrec/error.hpp"
#include "e2egrec/gfae.hpp"

namespace e2eg {

// ---------------------------------------------------------------------------
// Labels

void LabelConfig::validate() const {
  if (!(tau > 0.0)) throw Error(ErrorCode::kConfig, "labels.tau must be positive");
  if (!(clip_lo <= clip_hi)) throw Error(ErrorCode::kConfig, "label clip bounds are inverted");
}

std::uint32_t LabelConfig::positive_mask(const InteractionLog& log) const {
  std::uint32_t mask = 0;
  for (std::size_t k = 0; k < log.action_names.size(); ++k)
    if (std::find(positive_actions.begin(), positive_actions.end(), log.action_names[k]) != positive_actions.end())
      mask |= 1u << k;
  return mask;
}

Labels make_label(double staytime, std::uint32_t pos_actions, bool neg_action, const LabelConfig& cfg,
                  std::uint32_t positive_mask) {
  Labels out;
  out.staytime = staytime > cfg.tau ? 1.0 : 0.0;
  const double interact =
      static_cast<double>(std::popcount(pos_actions & positive_mask)) - (neg_action ? 1.0 : 0.0);
  out.refined = std::clamp(out.staytime + interact, cfg.clip_lo, cfg.clip_hi);
  return out;
}

// ---------------------------------------------------------------------------
// Towers

Tower Tower::create(ParameterSet& params, const std::string& prefix, const std::vector<std::size_t>& widths, Rng& rng,
                    bool relu_last) {
  require(widths.size() >= 2, "tower needs at least an input and an output width");
  Tower t;
  t.relu_last = relu_last;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    // He-uniform weights (variance 2/fan_in) keep ReLU activations from
    // shrinking layer over layer; biases start at zero.
    const double bound = std::sqrt(6.0 / static_cast<double>(widths[l]));
    Tensor w({widths[l], widths[l + 1]});
    Tensor b({widths[l + 1]});
    for (auto& v : w.data()) v = rng.uniform(-bound, bound);
    t.weights.push_back(&params.add(prefix + ".W" + std::to_string(l), std::move(w)));
    t.biases.push_back(&params.add(prefix + ".b" + std::to_string(l), std::move(b)));
  }
  return t;
}

Var Tower::forward(ComputeGraph& g, Var x) const {
  if (x.shape().size() != 2 || x.shape()[1] != in_width())
    throw ShapeError("tower input " + shape_str(x.shape()) + " does not match width " + std::to_string(in_width()));
  for (std::size_t l = 0; l < weights.size(); ++l) {
    x = ops::add_row_bias(ops::matmul(x, g.parameter(*weights[l])), g.parameter(*biases[l]));
    if (l + 1 < weights.size() || relu_last) x = ops::relu(x);
  }
  return x;
}

UpperFusion parse_upper_fusion(const std::string& s) {
  if (s == "attn") return UpperFusion::kAttn;
  if (s == "gate") return UpperFusion::kGate;
  if (s == "none") return UpperFusion::kNone;
  throw Error(ErrorCode::kConfig, "unknown upper fusion '" + s + "' (expected attn|gate|none)");
}

const char* upper_fusion_name(UpperFusion f) {
  switch (f) {
    case UpperFusion::kAttn: return "attn";
    case UpperFusion::kGate: return "gate";
    case UpperFusion::kNone: return "none";
  }
  return "?";
}

void ScoreWeights::validate() const {
  if (!(reward >= 0.0 && stay >= 0.0 && reward + stay > 0.0))
    throw Error(ErrorCode::kConfig, "score weights must be nonnegative with a positive sum");
}

// ---------------------------------------------------------------------------
// RankHead

RankHead::RankHead(const RankConfig& config, ParameterSet& params, Rng& rng) : config_(config) {
  config_.score.validate();
  const std::size_t d = config.token_dim;
  const std::size_t d_bottom = config.input_dim + config.gnn_dim;
  auto track = [&](std::size_t first) {
    for (auto it = params.begin() + static_cast<std::ptrdiff_t>(first); it != params.end(); ++it)
      params_.push_back(it->get());
  };
  const std::size_t first = params.size();

  bottom_gate_ = GateParams::create(params, "bottom_gate", d_bottom, rng);
  std::vector<std::size_t> widths{d_bottom};
  widths.insert(widths.end(), config.shared_hidden.begin(), config.shared_hidden.end());
  shared_ = Tower::create(params, "shared", widths, rng, /*relu_last=*/true);

  std::size_t task_in = shared_.out_width();
  if (config.upper != UpperFusion::kNone) {
    ltr_proj_ = &params.add("ltr_proj", init_projection(config.input_dim, d, rng));
    proj_shared_ = &params.add("proj.shared", init_projection(shared_.out_width(), d, rng));
    proj_ltr_ = &params.add("proj.ltr", init_projection(d, d, rng));
    proj_gnn_ = &params.add("proj.gnn", init_projection(config.gnn_dim, d, rng));
    if (config.upper == UpperFusion::kAttn) {
      upper_attn_ = AttnParams::create(params, "upper_attn", d, config.heads, rng);
      task_in = d;
    } else {
      upper_gate_ = GateParams::create(params, "upper_gate", 3 * d, rng);
      task_in = 3 * d;
    }
  }
  std::vector<std::size_t> task{task_in};
  task.insert(task.end(), config.task_hidden.begin(), config.task_hidden.end());
  task.push_back(1);
  reward_ = Tower::create(params, "reward", task, rng);
  stay_ = Tower::create(params, "stay", task, rng);
  track(first);
}

RankOutput RankHead::forward(ComputeGraph& g, Var f_in, Var f_gnn) const {
  if (f_in.shape().size() != 2 || f_in.shape()[1] != config_.input_dim)
    throw ShapeError("rank head: F_in " + shape_str(f_in.shape()) + " expected width " +
                     std::to_string(config_.input_dim));
  if (f_gnn.shape().size() != 2 || f_gnn.shape()[1] != config_.gnn_dim || f_gnn.shape()[0] != f_in.shape()[0])
    throw ShapeError("rank head: F_gnn " + shape_str(f_gnn.shape()) + " does not match F_in " +
                     shape_str(f_in.shape()));
  RankOutput out;
  Var bottom = gate_fuse(g, ops::concat_cols({f_in, f_gnn}), bottom_gate_);
  out.shared = shared_.forward(g, bottom);

  Var fused = out.shared;
  if (config_.upper != UpperFusion::kNone) {
    Var f_ltr = ops::matmul(f_in, g.parameter(*ltr_proj_));
    std::vector<Var> tokens{project_to_common(out.shared, g.parameter(*proj_shared_)),
                            project_to_common(f_ltr, g.parameter(*proj_ltr_)),
                            project_to_common(f_gnn, g.parameter(*proj_gnn_))};
    if (config_.upper == UpperFusion::kAttn)
      fused = attn_fuse(ops::stack(tokens), bind(g, upper_attn_));
    else
      fused = gate_fuse(g, ops::concat_cols(tokens), upper_gate_);
  }
  out.reward_logits = reward_.forward(g, fused);
  out.stay_logits = stay_.forward(g, fused);
  out.final_logits =
      ops::weighted_sum({out.reward_logits, out.stay_logits}, {config_.score.reward, config_.score.stay});
  return out;
}

std::vector<Parameter*> RankHead::parameters() const { return params_; }

// ---------------------------------------------------------------------------
// Losses

Var bce_with_logits(Var logits, const Tensor& labels) { return ops::bce(ops::sigmoid(logits), labels); }

Var ltr_loss(const RankOutput& out, const Tensor& refined, const Tensor& staytime) {
  return ops::add(bce_with_logits(out.reward_logits, refined), bce_with_logits(out.stay_logits, staytime));
}

Var bpr_loss(Var z, Var w, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  require(!pairs.empty(), "bpr_loss needs at least one pair");
  const std::size_t n = z.shape()[0];
  std::vector<std::size_t> pos, neg;
  for (const auto& [i, j] : pairs) {
    require(i < n && j < n, "bpr pair index out of range");
    pos.push_back(i);
    neg.push_back(j);
  }
  Var scores = ops::matmul(z, w);
  Var margin = ops::sub(ops::gather_rows(scores, std::move(pos)), ops::gather_rows(scores, std::move(neg)));
  return ops::sum_all(ops::softplus(ops::scale(margin, -1.0)));
}

// ---------------------------------------------------------------------------
// E2EModel

std::pair<std::vector<std::uint64_t>, std::vector<std::size_t>> batch_sources(const Batch& batch) {
  std::vector<std::uint64_t> sources;
  std::vector<std::size_t> row_to_source;
  std::unordered_map<std::uint64_t, std::size_t> seen;
  for (auto item : batch.items) {
    auto [it, fresh] = seen.emplace(item, sources.size());
    if (fresh) sources.push_back(item);
    row_to_source.push_back(it->second);
  }
  return {sources, row_to_source};
}

E2EModel::E2EModel(const ModelConfig& config, std::size_t num_items, Rng& rng) : config_(config) {
  config_.rank.gnn_dim = config.encoder.dim;
  encoder_ = std::make_unique<Encoder>(config_.encoder, num_items, params_, rng);
  head_ = std::make_unique<RankHead>(config_.rank, params_, rng);
}

Tensor gather_target(const Tensor& table, const Subgraph& sub) {
  if (table.rank() != 2) throw ShapeError("reconstruction target table must be a matrix");
  Tensor out({sub.num_nodes(), table.cols()});
  for (std::size_t r = 0; r < sub.num_nodes(); ++r) {
    const auto item = static_cast<std::size_t>(sub.nodes[r]);
    if (item >= table.rows())
      throw Error(ErrorCode::kInvalidArgument, "item " + std::to_string(item) + " has no reconstruction target row");
    for (std::size_t c = 0; c < table.cols(); ++c) out.at(r, c) = table.at(item, c);
  }
  return out;
}

E2EModel::Forward E2EModel::forward(ComputeGraph& g, const Subgraph& sub, const Batch& batch, GnnCoupling coupling,
                                    const Tensor* ssl_target_table) const {
  const auto [sources, row_to_source] = batch_sources(batch);
  if (sub.num_sources != sources.size() || !std::equal(sources.begin(), sources.end(), sub.nodes.begin()))
    throw Error(ErrorCode::kInvalidArgument, "subgraph sources do not match the batch items");
  Forward f;
  f.num_sources = sub.num_sources;
  auto enc = encoder_->forward(g, sub);
  f.h0 = enc.h0;
  f.y = enc.y;
  Var target = ssl_target_table ? g.constant(gather_target(*ssl_target_table, sub)) : reconstruction_target(enc.h0);
  f.ssl_loss = gfae_loss(target, enc.y);
  Var rank_input = coupling == GnnCoupling::kJoint ? enc.y : ops::stop_gradient(enc.y);
  Var f_gnn = ops::gather_rows(rank_input, row_to_source);
  Var f_in = g.constant(batch.user_features);
  f.rank = head_->forward(g, f_in, f_gnn);
  f.ltr_loss = ltr_loss(f.rank, batch.labels, batch.stay_labels);
  return f;
}

}  // namespace e2eg
