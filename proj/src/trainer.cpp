// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2egrec/trainer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "e2egrec/error.hpp"
#include "e2egrec/gfae.hpp"
#include "e2egrec/rng.hpp"

namespace e2eg {

// ---------------------------------------------------------------------------
// Modes

TrainMode parse_train_mode(const std::string& s) {
  if (s == "e2e") return TrainMode::kE2E;
  if (s == "cascaded") return TrainMode::kCascaded;
  if (s == "e2e-no-gradnorm") return TrainMode::kE2ENoGradNorm;
  if (s == "cascaded-naive") return TrainMode::kCascadedNaive;
  throw Error(ErrorCode::kConfig, "unknown mode '" + s + "' (expected e2e|cascaded|e2e-no-gradnorm|cascaded-naive)");
}

const char* train_mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::kE2E: return "e2e";
    case TrainMode::kCascaded: return "cascaded";
    case TrainMode::kE2ENoGradNorm: return "e2e-no-gradnorm";
    case TrainMode::kCascadedNaive: return "cascaded-naive";
  }
  return "?";
}

FusionMode parse_fusion_mode(const std::string& s) {
  if (s == "gate") return FusionMode::kGate;
  if (s == "attn") return FusionMode::kAttn;
  if (s == "both-levels") return FusionMode::kBothLevels;
  if (s == "bottom-only") return FusionMode::kBottomOnly;
  throw Error(ErrorCode::kConfig, "unknown fusion '" + s + "' (expected gate|attn|both-levels|bottom-only)");
}

const char* fusion_mode_name(FusionMode f) {
  switch (f) {
    case FusionMode::kGate: return "gate";
    case FusionMode::kAttn: return "attn";
    case FusionMode::kBothLevels: return "both-levels";
    case FusionMode::kBottomOnly: return "bottom-only";
  }
  return "?";
}

UpperFusion upper_fusion_for(FusionMode f) {
  switch (f) {
    case FusionMode::kGate: return UpperFusion::kGate;
    case FusionMode::kAttn:
    case FusionMode::kBothLevels: return UpperFusion::kAttn;
    case FusionMode::kBottomOnly: return UpperFusion::kNone;
  }
  return UpperFusion::kAttn;
}

SslTarget parse_ssl_target(const std::string& s) {
  if (s == "embedding") return SslTarget::kEmbedding;
  if (s == "features") return SslTarget::kFeatures;
  throw Error(ErrorCode::kConfig, "unknown ssl target '" + s + "' (expected embedding|features)");
}

const char* ssl_target_name(SslTarget t) { return t == SslTarget::kEmbedding ? "embedding" : "features"; }

void TrainConfig::validate() const {
  sampler.validate();
  labels.validate();
  gradnorm.validate();
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error(ErrorCode::kConfig, "train.lr must be >= 0");
  if (batch_size == 0) throw Error(ErrorCode::kConfig, "train.batch_size must be positive");
  if (epochs_per_day == 0) throw Error(ErrorCode::kConfig, "train.epochs_per_day must be positive");
  if (model.encoder.dim == 0 || model.encoder.layers == 0) throw Error(ErrorCode::kConfig, "encoder dims must be positive");
  if (model.rank.heads == 0 || model.rank.token_dim % model.rank.heads != 0)
    throw Error(ErrorCode::kConfig, "rank.token_dim must be divisible by rank.heads");
}

// ---------------------------------------------------------------------------
// Metrics

double auc(std::span<const double> scores, std::span<const double> labels) {
  require(scores.size() == labels.size(), "auc: score and label counts differ");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t npos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] > 0.5) {
        rank_sum += avg_rank;
        ++npos;
      }
    i = j;
  }
  const std::size_t nneg = n - npos;
  if (npos == 0 || nneg == 0) throw Error(ErrorCode::kUndefinedAuc, "AUC undefined: labels contain a single class");
  const double p = static_cast<double>(npos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(nneg));
}

double MetricReport::mean_auc() const {
  if (days.empty()) return 0.0;
  double s = 0.0;
  for (const auto& d : days) s += d.auc;
  return s / static_cast<double>(days.size());
}

double MetricReport::mean_stay_auc() const {
  if (days.empty()) return 0.0;
  double s = 0.0;
  for (const auto& d : days) s += d.stay_auc;
  return s / static_cast<double>(days.size());
}

std::vector<double> relative_lift(const MetricReport& a, const MetricReport& b) {
  require(a.days.size() == b.days.size(), "relative_lift: reports cover different day counts");
  std::vector<double> out;
  for (std::size_t d = 0; d < a.days.size(); ++d) out.push_back((a.days[d].auc - b.days[d].auc) / b.days[d].auc);
  return out;
}

double mean_relative_lift(const MetricReport& a, const MetricReport& b) {
  const auto l = relative_lift(a, b);
  if (l.empty()) return 0.0;
  return std::accumulate(l.begin(), l.end(), 0.0) / static_cast<double>(l.size());
}

// ---------------------------------------------------------------------------
// Streaming training

ModelConfig model_config_for(const Stream& stream, const TrainConfig& config) {
  ModelConfig m = config.model;
  require(stream.user_features.rank() == 2, "user features must be a matrix");
  m.rank.input_dim = stream.user_features.cols();
  m.rank.upper = upper_fusion_for(config.fusion);
  return m;
}

namespace {

void check_stream(const Stream& stream, const TrainConfig& cfg) {
  if (stream.days.empty()) throw Error(ErrorCode::kInvalidArgument, "stream has no days");
  if (cfg.ssl_target == SslTarget::kFeatures) {
    if (stream.item_features.rank() != 2 || stream.item_features.rows() < stream.graph.num_items)
      throw Error(ErrorCode::kInvalidArgument, "feature reconstruction target needs one item feature row per item");
    if (stream.item_features.cols() != cfg.model.encoder.dim)
      throw Error(ErrorCode::kConfig, "item feature width " + std::to_string(stream.item_features.cols()) +
                                          " differs from encoder.dim " + std::to_string(cfg.model.encoder.dim));
  }
  stream.graph.validate();
  const auto users = static_cast<std::int64_t>(stream.user_features.rows());
  for (std::size_t d = 0; d < stream.days.size(); ++d) {
    if (stream.days[d].records.empty())
      throw Error(ErrorCode::kInvalidArgument, "day " + std::to_string(d + 1) + " is empty");
    for (const auto& r : stream.days[d].records) {
      if (r.user_id < 0 || r.user_id >= users)
        throw Error(ErrorCode::kInvalidArgument, "day " + std::to_string(d + 1) + ": user " +
                                                     std::to_string(r.user_id) + " has no feature row");
      if (r.item_id < 0 || static_cast<std::uint64_t>(r.item_id) >= stream.graph.num_items)
        throw Error(ErrorCode::kInvalidArgument, "day " + std::to_string(d + 1) + ": item " +
                                                     std::to_string(r.item_id) + " is outside the item graph");
    }
  }
}

Batch make_batch(const InteractionLog& log, std::span<const std::size_t> idx, const Tensor& features,
                 const LabelConfig& labels) {
  const std::uint32_t mask = labels.positive_mask(log);
  const std::size_t p = features.cols();
  Batch b;
  b.user_features = Tensor({idx.size(), p});
  b.labels = Tensor({idx.size()});
  b.stay_labels = Tensor({idx.size()});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& rec = log.records[idx[r]];
    const auto u = static_cast<std::size_t>(rec.user_id);
    for (std::size_t f = 0; f < p; ++f) b.user_features.at(r, f) = features.at(u, f);
    b.items.push_back(static_cast<std::uint64_t>(rec.item_id));
    const Labels l = make_label(rec.staytime, rec.pos_actions, rec.neg_action, labels, mask);
    b.labels.data()[r] = l.refined;
    b.stay_labels.data()[r] = l.staytime;
  }
  return b;
}

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  return v;
}

template <class Fn>
void for_each_batch(const std::vector<std::size_t>& order, std::size_t batch_size, Fn&& fn) {
  for (std::size_t s = 0; s < order.size(); s += batch_size) {
    const std::size_t e = std::min(order.size(), s + batch_size);
    fn(std::span<const std::size_t>(order.data() + s, e - s));
  }
}

Subgraph sample_for(const Batch& b, const Stream& stream, const SamplerConfig& sc, Rng& rng) {
  const auto sources = batch_sources(b).first;
  return sample_subgraph(sources, stream.graph, sc, rng);
}

/// Scores one day with the current parameters; returns (auc, stay_auc).
std::pair<double, double> evaluate_day(const E2EModel& model, const Stream& stream, std::size_t day,
                                       const TrainConfig& cfg, GnnCoupling coupling) {
  const auto& log = stream.days[day];
  Rng rng = substream(cfg.seed, "eval.sampler", day);
  std::vector<std::size_t> order(log.records.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> scores, stay_scores, labels, stay_labels;
  for_each_batch(order, cfg.batch_size, [&](std::span<const std::size_t> idx) {
    Batch b = make_batch(log, idx, stream.user_features, cfg.labels);
    Subgraph sub = sample_for(b, stream, cfg.sampler, rng);
    ComputeGraph g;
    auto f = model.forward(g, sub, b, coupling);
    for (double v : f.rank.final_logits.value().data()) scores.push_back(v);
    for (double v : f.rank.stay_logits.value().data()) stay_scores.push_back(v);
    for (double v : b.labels.data()) labels.push_back(v);
    for (double v : b.stay_labels.data()) stay_labels.push_back(v);
  });
  return {auc(scores, labels), auc(stay_scores, stay_labels)};
}

MetricReport new_report(const TrainConfig& cfg) {
  MetricReport r;
  r.mode = train_mode_name(cfg.mode);
  r.fusion = fusion_mode_name(cfg.fusion);
  r.backbone = backbone_name(cfg.model.encoder.backbone);
  r.seed = cfg.seed;
  r.tau = cfg.labels.tau;
  return r;
}

const Tensor* target_table(const Stream& stream, const TrainConfig& cfg) {
  return cfg.ssl_target == SslTarget::kFeatures ? &stream.item_features : nullptr;
}

std::vector<Parameter*> all_parameters(ParameterSet& params) {
  std::vector<Parameter*> out;
  for (auto& p : params) out.push_back(p.get());
  return out;
}

double max_abs_grad(const std::vector<Parameter*>& ps) {
  double m = 0.0;
  for (const Parameter* p : ps)
    for (double v : p->grad.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

MetricReport run_streaming_training(const Stream& stream, const TrainConfig& config) {
  if (config.mode == TrainMode::kCascaded) return run_cascaded_baseline(stream, config);
  config.validate();
  check_stream(stream, config);

  Rng init = substream(config.seed, "init");
  E2EModel model(model_config_for(stream, config), stream.graph.num_items, init);
  Rng sampler_rng = substream(config.seed, "train.sampler");

  GradNormConfig gn = config.gradnorm;
  GnnCoupling coupling = GnnCoupling::kJoint;
  if (config.mode == TrainMode::kE2ENoGradNorm) gn.enabled = false;
  if (config.mode == TrainMode::kCascadedNaive) {
    gn.enabled = false;
    gn.initial = {1.0, 1.0};
    coupling = GnnCoupling::kDetached;
  }
  MultiTaskOptimizer opt(gn, config.lr);
  const auto trainable = all_parameters(model.params());

  MetricReport report = new_report(config);
  std::size_t step = 0;
  for (std::size_t d = 0; d < stream.days.size(); ++d) {
    DayMetrics dm;
    dm.day = d + 1;
    dm.examples = stream.days[d].records.size();
    std::tie(dm.auc, dm.stay_auc) = evaluate_day(model, stream, d, config, coupling);

    double ssl_sum = 0.0, ltr_sum = 0.0;
    std::size_t n_steps = 0;
    for (std::size_t e = 0; e < config.epochs_per_day; ++e) {
      Rng order_rng = substream(config.seed, "train.order", d * 1000 + e);
      const auto order = shuffled(stream.days[d].records.size(), order_rng);
      for_each_batch(order, config.batch_size, [&](std::span<const std::size_t> idx) {
        Batch b = make_batch(stream.days[d], idx, stream.user_features, config.labels);
        Subgraph sub = sample_for(b, stream, config.sampler, sampler_rng);
        ComputeGraph g;
        auto f = model.forward(g, sub, b, coupling, target_table(stream, config));
        auto st = opt.step(g, f.ssl_loss, f.ltr_loss, f.h0, f.num_sources, trainable, model.params());
        report.steps.push_back({d + 1, ++step, st.losses[kTaskSsl], st.losses[kTaskLtr], st.weights[kTaskSsl],
                                st.weights[kTaskLtr]});
        ssl_sum += st.losses[kTaskSsl];
        ltr_sum += st.losses[kTaskLtr];
        ++n_steps;
      });
    }
    dm.mean_ssl_loss = ssl_sum / static_cast<double>(n_steps);
    dm.mean_ltr_loss = ltr_sum / static_cast<double>(n_steps);
    dm.w_ssl = opt.weights().w[kTaskSsl];
    dm.w_ltr = opt.weights().w[kTaskLtr];
    report.days.push_back(dm);
  }
  return report;
}

MetricReport run_cascaded_baseline(const Stream& stream, const TrainConfig& config_in) {
  TrainConfig config = config_in;
  config.mode = TrainMode::kCascaded;
  config.validate();
  check_stream(stream, config);

  Rng init = substream(config.seed, "init");
  E2EModel model(model_config_for(stream, config), stream.graph.num_items, init);
  GradNormConfig gn = config.gradnorm;
  gn.enabled = false;
  gn.initial = {1.0, 1.0};
  MultiTaskOptimizer opt(gn, config.lr);
  const auto encoder_params = model.encoder().parameters();
  const auto head_params = model.head().parameters();
  MetricReport report = new_report(config);

  // Stage A: encoder and embeddings on the reconstruction loss only.
  std::vector<double> stage_a_loss(stream.days.size(), 0.0);
  {
    Rng rng = substream(config.seed, "stage_a.sampler");
    for (std::size_t d = 0; d < stream.days.size(); ++d) {
      std::size_t n = 0;
      for (std::size_t e = 0; e < config.epochs_per_day; ++e) {
        Rng order_rng = substream(config.seed, "train.order", d * 1000 + e);
        const auto order = shuffled(stream.days[d].records.size(), order_rng);
        for_each_batch(order, config.batch_size, [&](std::span<const std::size_t> idx) {
          Batch b = make_batch(stream.days[d], idx, stream.user_features, config.labels);
          Subgraph sub = sample_for(b, stream, config.sampler, rng);
          ComputeGraph g;
          auto enc = model.encoder().forward(g, sub);
          const Tensor* table = target_table(stream, config);
          Var target = table ? g.constant(gather_target(*table, sub)) : reconstruction_target(enc.h0);
          Var ssl = gfae_loss(target, enc.y);
          stage_a_loss[d] += opt.step_single(g, ssl, encoder_params, model.params());
          ++n;
        });
      }
      stage_a_loss[d] /= static_cast<double>(n);
    }
  }

  // Stage B: frozen encoder, head trained on the ranking loss.
  Rng sampler_rng = substream(config.seed, "train.sampler");
  std::size_t step = 0;
  for (std::size_t d = 0; d < stream.days.size(); ++d) {
    DayMetrics dm;
    dm.day = d + 1;
    dm.examples = stream.days[d].records.size();
    std::tie(dm.auc, dm.stay_auc) = evaluate_day(model, stream, d, config, GnnCoupling::kDetached);
    double ltr_sum = 0.0;
    std::size_t n_steps = 0;
    for (std::size_t e = 0; e < config.epochs_per_day; ++e) {
      Rng order_rng = substream(config.seed, "train.order", d * 1000 + e);
      const auto order = shuffled(stream.days[d].records.size(), order_rng);
      for_each_batch(order, config.batch_size, [&](std::span<const std::size_t> idx) {
        Batch b = make_batch(stream.days[d], idx, stream.user_features, config.labels);
        Subgraph sub = sample_for(b, stream, config.sampler, sampler_rng);
        ComputeGraph g;
        auto f = model.forward(g, sub, b, GnnCoupling::kDetached, target_table(stream, config));
        const double ltr = opt.step_single(g, f.ltr_loss, head_params, model.params());
        report.frozen_grad_max = std::max(report.frozen_grad_max, max_abs_grad(encoder_params));
        report.steps.push_back({d + 1, ++step, f.ssl_loss.value().item(), ltr, 1.0, 1.0});
        ltr_sum += ltr;
        ++n_steps;
      });
    }
    dm.mean_ssl_loss = stage_a_loss[d];
    dm.mean_ltr_loss = ltr_sum / static_cast<double>(n_steps);
    report.days.push_back(dm);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Coupling and subspace harnesses

namespace {

double grad_norm_sq(const std::vector<Parameter*>& ps) {
  double s = 0.0;
  for (const Parameter* p : ps)
    for (double v : p->grad.data()) s += v * v;
  return s;
}

std::vector<Tensor> grads_of(const std::vector<Parameter*>& ps) {
  std::vector<Tensor> out;
  for (const Parameter* p : ps) out.push_back(p->grad);
  return out;
}

}  // namespace

CouplingReport coupling_check(const ModelConfig& config, std::uint64_t seed, double perturbation) {
  Rng rng = substream(seed, "coupling");
  // Random co-interaction log over a small catalogue.
  const std::size_t num_items = 30, num_users = 25, batch = 16;
  InteractionLog log;
  for (std::size_t u = 0; u < num_users; ++u)
    for (std::size_t k = 0; k < 6; ++k) {
      Interaction r;
      r.user_id = static_cast<std::int64_t>(u);
      r.item_id = static_cast<std::int64_t>(rng.below(num_items));
      log.records.push_back(r);
    }
  const ItemGraph graph = build_swing_graph(log, 1.0, 10, num_items);

  Rng init = substream(seed, "coupling.init");
  E2EModel model(config, num_items, init);
  Batch b;
  const std::size_t p = config.rank.input_dim;
  b.user_features = Tensor({batch, p});
  b.labels = Tensor({batch});
  b.stay_labels = Tensor({batch});
  for (auto& v : b.user_features.data()) v = rng.normal();
  for (std::size_t r = 0; r < batch; ++r) {
    b.items.push_back(rng.below(num_items));
    b.labels.data()[r] = r % 2 == 0 ? 1.0 : 0.0;
    b.stay_labels.data()[r] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  Rng srng = substream(seed, "coupling.sampler");
  const Subgraph sub = sample_subgraph(batch_sources(b).first, graph, SamplerConfig{{5}, 1.0, 0}, srng);
  const auto enc = model.encoder().parameters();
  const auto head = model.head().parameters();

  CouplingReport rep;
  std::vector<Tensor> head_grad_before;
  {
    ComputeGraph g;
    auto f = model.forward(g, sub, b, GnnCoupling::kJoint);
    model.params().zero_grad();
    g.backward(f.ltr_loss);
    rep.e2e_encoder_grad_norm = std::sqrt(grad_norm_sq(enc));
    head_grad_before = grads_of(head);
  }
  {
    ComputeGraph g;
    auto f = model.forward(g, sub, b, GnnCoupling::kDetached);
    model.params().zero_grad();
    g.backward(f.ltr_loss);
    rep.cascaded_encoder_grad_norm = std::sqrt(grad_norm_sq(enc));
  }
  {
    Rng prng = substream(seed, "coupling.perturb");
    for (Parameter* q : enc)
      for (auto& v : q->value.data()) v += perturbation * prng.normal();
    ComputeGraph g;
    auto f = model.forward(g, sub, b, GnnCoupling::kJoint);
    model.params().zero_grad();
    g.backward(f.ltr_loss);
    double s = 0.0;
    for (std::size_t k = 0; k < head.size(); ++k) {
      const auto a = head[k]->grad.data();
      const auto c = head_grad_before[k].data();
      for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - c[i]) * (a[i] - c[i]);
    }
    rep.head_grad_shift = std::sqrt(s);
  }
  return rep;
}

SubspaceReport subspace_check(const Tensor& z, const Tensor& w,
                              const std::vector<std::pair<std::size_t, std::size_t>>& pairs, const Tensor& x,
                              std::uint64_t rng_seed) {
  require(z.rank() == 2 && z.cols() >= 2, "subspace_check: Z must be n x k with k >= 2");
  require(w.numel() == z.cols(), "subspace_check: w must have k entries");
  require(x.rank() == 2 && x.rows() == z.rows(), "subspace_check: X must have as many rows as Z");
  const std::size_t n = z.rows(), k = z.cols();
  double ww = 0.0;
  for (double v : w.data()) ww += v * v;
  if (!(ww > 0.0)) throw Error(ErrorCode::kInvalidArgument, "subspace_check: w must be nonzero");
  Tensor wcol({k, 1});
  std::copy(w.data().begin(), w.data().end(), wcol.data().begin());

  // Projection of a k-vector onto ker(w^T).
  auto project_kernel = [&](std::vector<double> v) {
    double dot = 0.0;
    for (std::size_t c = 0; c < k; ++c) dot += v[c] * wcol.data()[c];
    for (std::size_t c = 0; c < k; ++c) v[c] -= dot / ww * wcol.data()[c];
    return v;
  };

  SubspaceReport rep;
  ParameterSet ps;
  Parameter& zp = ps.add("Z", z);
  double base_loss = 0.0;
  {
    ComputeGraph g;
    Var loss = bpr_loss(g.parameter(zp), g.constant(wcol), pairs);
    base_loss = loss.value().item();
    g.backward(loss);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(k);
      for (std::size_t c = 0; c < k; ++c) row[c] = zp.grad.at(i, c);
      const auto pr = project_kernel(row);
      double s = 0.0;
      for (double v : pr) s += v * v;
      rep.max_kernel_grad = std::max(rep.max_kernel_grad, std::sqrt(s));
    }
  }
  {
    Rng rng(rng_seed);
    Tensor zp2 = z;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> r(k);
      for (auto& v : r) v = rng.normal();
      const auto d = project_kernel(r);
      for (std::size_t c = 0; c < k; ++c) zp2.at(i, c) += d[c];
    }
    ComputeGraph g;
    const double l2 = bpr_loss(g.constant(zp2), g.constant(wcol), pairs).value().item();
    rep.bpr_relative_change = std::abs(l2 - base_loss) / std::max(std::abs(base_loss), 1e-300);
  }
  {
    Eigen::MatrixXd ze(n, k), xe(n, x.cols());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) ze(i, c) = z.at(i, c);
      for (std::size_t c = 0; c < x.cols(); ++c) xe(i, c) = x.at(i, c);
    }
    const double xnorm = std::max(xe.norm(), 1e-300);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ze);
    const Eigen::MatrixXd d = qr.solve(xe);
    rep.decoder_residual = (xe - ze * d).norm() / xnorm;
    const Eigen::Index r = qr.rank();
    const Eigen::MatrixXd q = Eigen::MatrixXd(qr.householderQ()).leftCols(r);
    rep.projection_residual = (xe - q * (q.transpose() * xe)).norm() / xnorm;
  }
  return rep;
}

SubspaceReport subspace_check_random(std::uint64_t seed) {
  Rng rng = substream(seed, "subspace");
  const std::size_t n = 20, k = 4;
  Tensor x({n, k}), r({k, k}), w({k});
  for (auto& v : x.data()) v = rng.normal();
  // Diagonally dominated R is invertible.
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) r.at(i, j) = (i == j ? 3.0 : 0.0) + 0.5 * rng.normal();
  for (auto& v : w.data()) v = rng.normal();
  Tensor z({n, k});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t m = 0; m < k; ++m) s += x.at(i, m) * r.at(m, j);
      z.at(i, j) = s;
    }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  while (pairs.size() < 40) {
    const std::size_t i = rng.below(n), j = rng.below(n);
    if (i != j) pairs.emplace_back(i, j);
  }
  return subspace_check(z, w, pairs, x, substream_seed(seed, "subspace.kernel"));
}

}  // namespace e2eg
