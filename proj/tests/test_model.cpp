// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "e2egrec/encoder.hpp"
#include "e2egrec/fusion.hpp"
#include "e2egrec/gfae.hpp"
#include "e2egrec/rank_model.hpp"
#include "model_fixture.hpp"

using namespace e2eg;
using e2eg::testing::ModelFixture;
using e2eg::testing::random_tensor;

namespace {

Subgraph make_subgraph(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& undirected) {
  Subgraph s;
  for (std::size_t i = 0; i < n; ++i) s.nodes.push_back(i);
  s.num_sources = n;
  s.hop.assign(n, 0);
  for (auto [a, b] : undirected) {
    s.edges.push_back({a, b, 1.0});
    s.edges.push_back({b, a, 1.0});
  }
  return s;
}

}  // namespace

TEST_CASE("normalized adjacency examples") {
  const auto pair = normalized_adjacency(make_subgraph(2, {{0, 1}})).to_dense();
  CHECK(pair.at(0, 1) == 1.0);
  CHECK(pair.at(1, 0) == 1.0);

  const auto iso = normalized_adjacency(make_subgraph(3, {{0, 1}})).to_dense();
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(iso.at(2, k) == 0.0);
    CHECK(iso.at(k, 2) == 0.0);
  }

  const auto star = normalized_adjacency(make_subgraph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}})).to_dense();
  for (std::size_t leaf = 1; leaf < 5; ++leaf) CHECK(star.at(0, leaf) == doctest::Approx(0.5));
}

TEST_CASE("lightgcn examples") {
  ComputeGraph g;
  const Tensor h = Tensor::matrix(2, 2, {1.0, 2.0, 3.0, -1.0});
  const auto y = lightgcn_forward(make_subgraph(2, {{0, 1}}), g.constant(h), 1).value();
  CHECK(y.at(0, 0) == doctest::Approx(2.0));
  CHECK(y.at(0, 1) == doctest::Approx(0.5));

  const Tensor h3 = Tensor::matrix(3, 1, {3.0, 1.0, 2.0});
  const auto iso = lightgcn_forward(make_subgraph(3, {{0, 1}}), g.constant(h3), 2).value();
  CHECK(iso.at(2, 0) == doctest::Approx(2.0 / 3.0));

  const Tensor same = Tensor::matrix(3, 2, {0.4, -0.2, 0.4, -0.2, 0.4, -0.2});
  const auto tri = lightgcn_forward(make_subgraph(3, {{0, 1}, {1, 2}, {0, 2}}), g.constant(same), 3).value();
  CHECK(tri.max_abs_diff(same) <= 1e-12);
}

TEST_CASE("graphsage examples") {
  ComputeGraph g;
  const Tensor h = Tensor::matrix(2, 2, {0.5, -1.0, 0.25, 0.75});
  const Tensor w = Tensor::matrix(4, 2, {1, 0, 0, 1, 0, 0, 0, 0});  // [I | 0]^T: self only
  const auto lone = sage_forward(make_subgraph(2, {}), g.constant(h), {g.constant(w)}).value();
  CHECK(lone.at(0, 0) == doctest::Approx(0.5));
  CHECK(lone.at(0, 1) == 0.0);

  const auto mean = neighbor_mean_matrix(make_subgraph(2, {{0, 1}})).to_dense();
  CHECK(mean.at(0, 1) == 1.0);
  const auto pm = neighbor_mean_matrix(make_subgraph(3, {{0, 1}, {0, 2}}));
  const Tensor r = Tensor::matrix(3, 2, {9.0, 9.0, 1.5, -2.0, -1.5, 2.0});
  const auto hbar = ops::spmm(std::make_shared<SparseMatrix>(pm), g.constant(r)).value();
  CHECK(hbar.at(0, 0) == 0.0);
  CHECK(hbar.at(0, 1) == 0.0);
}

TEST_CASE("reconstruction loss examples") {
  ComputeGraph g;
  const Tensor x = Tensor::matrix(2, 2, {1, 0, 0, 1});
  CHECK(gfae_loss(g.constant(x), g.constant(x)).value().item() == 0.0);
  CHECK(gfae_loss(g.constant(x), g.constant(Tensor({2, 2}))).value().item() == doctest::Approx(1.0));
  CHECK(gfae_loss(g.constant(x), g.constant(Tensor::matrix(2, 2, {1, 0, 0, 0}))).value().item() ==
        doctest::Approx(0.5));

  ParameterSet ps;
  auto& h = ps.add("h", Tensor::matrix(2, 2, {0.3, -0.1, 0.2, 0.9}));
  ComputeGraph g2;
  auto h0 = g2.parameter(h);
  auto target = reconstruction_target(h0);
  CHECK(target.value() == h.value);
  auto loss = gfae_loss(target, h0);
  CHECK(loss.value().item() == 0.0);
  g2.backward(loss);
  CHECK(h.grad.norm() == 0.0);
}

TEST_CASE("gate fusion examples") {
  ComputeGraph g;
  Rng rng(4);
  const Tensor f = random_tensor({3, 4}, rng);
  auto fv = g.constant(f);
  auto w0 = g.constant(Tensor({4, 4}));
  const auto half = gate_fuse(fv, w0, g.constant(Tensor({4}))).value();
  for (std::size_t i = 0; i < f.numel(); ++i) CHECK(half[i] == doctest::Approx(0.5 * f[i]));
  const auto open = gate_fuse(fv, w0, g.constant(Tensor({4}, 20.0))).value();
  CHECK(open.max_abs_diff(f) <= 1e-8);
  const auto closed = gate_fuse(fv, w0, g.constant(Tensor({4}, -20.0))).value();
  CHECK(closed.norm() <= 1e-8 * f.norm());
}

TEST_CASE("attention fusion examples") {
  ParameterSet ps;
  Rng rng(5);
  auto p = AttnParams::create(ps, "attn", 4, 1, rng);
  p.query[0]->value = Tensor::identity(4);
  p.key[0]->value = Tensor::identity(4);
  p.value[0]->value = Tensor::identity(4);
  p.output->value = Tensor::identity(4);
  ComputeGraph g;
  const auto vars = bind(g, p);

  const Tensor t = random_tensor({2, 4}, rng);
  const auto single = attn_fuse(ops::stack({g.constant(t)}), vars).value();
  for (std::size_t i = 0; i < t.numel(); ++i) CHECK(single[i] == doctest::Approx(2.0 * t[i]));
  const auto triple = attn_fuse(ops::stack({g.constant(t), g.constant(t), g.constant(t)}), vars).value();
  for (std::size_t i = 0; i < t.numel(); ++i) CHECK(triple[i] == doctest::Approx(2.0 * t[i]));

  // Permuting tokens leaves the output unchanged under shared identity projections.
  const Tensor u = random_tensor({2, 4}, rng);
  const auto ab = attn_fuse(ops::stack({g.constant(t), g.constant(u)}), vars).value();
  const auto ba = attn_fuse(ops::stack({g.constant(u), g.constant(t)}), vars).value();
  CHECK(ab.max_abs_diff(ba) <= 1e-12);

  p.value[0]->value = Tensor({4, 4});
  p.output->value = Tensor({4, 4});
  ComputeGraph g2;
  const auto zeroed = attn_fuse(ops::stack({g2.constant(t), g2.constant(u)}), bind(g2, p)).value();
  for (std::size_t i = 0; i < t.numel(); ++i) CHECK(zeroed[i] == doctest::Approx(0.5 * (t[i] + u[i])));
}

TEST_CASE("projection examples") {
  Rng rng(6);
  const Tensor id = init_projection(4, 4, rng);
  CHECK(id == Tensor::identity(4));
  ComputeGraph g;
  const Tensor x = random_tensor({3, 4}, rng);
  CHECK(project_to_common(g.constant(x), g.constant(id)).value() == x);
  const Tensor m = init_projection(4, 6, rng);
  CHECK(project_to_common(g.constant(Tensor({3, 4})), g.constant(m)).value().norm() == 0.0);
}

TEST_CASE("label construction examples") {
  LabelConfig cfg;
  cfg.tau = 5.0;
  CHECK(make_label(10.0, 0, false, cfg).refined == 1.0);
  const auto like = make_label(2.0, 0b1, false, cfg);
  CHECK(like.refined == 1.0);
  CHECK(like.staytime == 0.0);
  CHECK(make_label(10.0, 0, true, cfg).refined == 0.0);
  CHECK(make_label(10.0, 0b111, false, cfg).refined == 1.0);
  CHECK(make_label(0.0, 0, true, cfg).refined == 0.0);
}

TEST_CASE("bce and bpr examples") {
  ComputeGraph g;
  CHECK(bce_with_logits(g.constant(Tensor::matrix(1, 1, {0.0})), Tensor::vector({1.0})).value().item() ==
        doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(bce_with_logits(g.constant(Tensor::matrix(1, 1, {20.0})), Tensor::vector({1.0})).value().item() <= 1e-8);
  CHECK(bce_with_logits(g.constant(Tensor::matrix(2, 1, {0.0, 0.0})), Tensor::vector({0.0, 1.0})).value().item() ==
        doctest::Approx(0.693147).epsilon(1e-6));

  const Tensor z = Tensor::matrix(2, 2, {0.3, 0.3, 0.3, 0.3});
  const Tensor w = Tensor::matrix(2, 1, {1.0, -2.0});
  CHECK(bpr_loss(g.constant(z), g.constant(w), {{0, 1}}).value().item() == doctest::Approx(std::log(2.0)));
  const Tensor z2 = Tensor::matrix(2, 2, {20.0, 0.0, 0.0, 0.0});
  const Tensor w2 = Tensor::matrix(2, 1, {1.0, 0.0});
  CHECK(bpr_loss(g.constant(z2), g.constant(w2), {{0, 1}}).value().item() <= 1e-8);
}

TEST_CASE("final score weights") {
  ModelFixture fx(3, Backbone::kLightGcn, UpperFusion::kAttn);
  {
    ModelFixture only_reward(3, Backbone::kLightGcn, UpperFusion::kAttn);
    only_reward.config.rank.score = {1.0, 0.0};
    Rng rng(3);
    E2EModel m(only_reward.config, 12, rng);
    ComputeGraph g;
    const auto f = m.forward(g, only_reward.sub, only_reward.batch, GnnCoupling::kJoint, &only_reward.target);
    CHECK(f.rank.final_logits.value() == f.rank.reward_logits.value());
  }
  // Zero tower weights leave only the output biases.
  auto& head = fx.model->head();
  for (Tower* t : {&head.reward_tower(), &head.stay_tower()})
    for (auto* w : t->weights) w->value.fill(0.0);
  head.reward_tower().biases.back()->value.fill(0.3);
  head.stay_tower().biases.back()->value.fill(-0.2);
  ComputeGraph g;
  const auto f = fx.model->forward(g, fx.sub, fx.batch, GnnCoupling::kJoint, &fx.target);
  const auto& s = fx.config.rank.score;
  for (double v : f.rank.final_logits.value().data()) CHECK(v == doctest::Approx(s.reward * 0.3 + s.stay * -0.2));
}

TEST_CASE("composed loss gradients match central differences") {
  for (auto backbone : {Backbone::kLightGcn, Backbone::kSage})
    for (auto upper : {UpperFusion::kAttn, UpperFusion::kGate}) {
      CAPTURE(backbone_name(backbone));
      CAPTURE(upper_fusion_name(upper));
      ModelFixture fx(11, backbone, upper);
      auto& params = fx.model->params();
      params.zero_grad();
      ComputeGraph g;
      g.backward(fx.total(g));
      const auto analytic = collect_gradients(params);
      const auto numeric = finite_difference_gradient(
          [&] {
            ComputeGraph h;
            return fx.total(h).value().item();
          },
          params, 1e-6);
      CHECK(e2eg::testing::max_rel_error(analytic, numeric) <= 1e-4);
    }
}
