// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "e2egrec/error.hpp"
#include "e2egrec/pipeline.hpp"
#include "e2egrec/trainer.hpp"
#include "small_run.hpp"
#include "test_util.hpp"

using namespace e2eg;
using e2eg::testing::small_run;

TEST_CASE("auc examples") {
  const double s1[] = {0.9, 0.1}, l1[] = {1.0, 0.0};
  CHECK(auc(s1, l1) == 1.0);
  const double s2[] = {0.4, 0.4}, l2[] = {1.0, 0.0};
  CHECK(auc(s2, l2) == 0.5);
  const double s3[] = {0.8, 0.6, 0.4}, l3[] = {1.0, 0.0, 1.0};
  CHECK(auc(s3, l3) == 0.5);
  const double s4[] = {0.1, 0.2, 0.3}, l4[] = {1.0, 1.0, 1.0};
  try {
    auc(s4, l4);
    FAIL("expected undefined AUC");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUndefinedAuc);
  }
}

TEST_CASE("relative lift") {
  MetricReport a, b;
  a.days = {{1, 10, 0.66}, {2, 10, 0.55}};
  b.days = {{1, 10, 0.60}, {2, 10, 0.55}};
  const auto lift = relative_lift(a, b);
  CHECK(lift[0] == doctest::Approx(0.1));
  CHECK(lift[1] == 0.0);
  CHECK(mean_relative_lift(a, b) == doctest::Approx(0.05));  // mean of per-day lifts
  b.days.pop_back();
  CHECK_THROWS_AS(relative_lift(a, b), Error);
}

TEST_CASE("mode names round trip") {
  for (auto m : {TrainMode::kE2E, TrainMode::kCascaded, TrainMode::kE2ENoGradNorm, TrainMode::kCascadedNaive})
    CHECK(parse_train_mode(train_mode_name(m)) == m);
  for (auto f : {FusionMode::kGate, FusionMode::kAttn, FusionMode::kBothLevels, FusionMode::kBottomOnly})
    CHECK(parse_fusion_mode(fusion_mode_name(f)) == f);
  CHECK(upper_fusion_for(FusionMode::kBottomOnly) == UpperFusion::kNone);
  CHECK(upper_fusion_for(FusionMode::kBothLevels) == UpperFusion::kAttn);
  CHECK_THROWS_AS(parse_train_mode("joint"), Error);
}

TEST_CASE("zero learning rate scores every day with the untrained model") {
  auto cfg = small_run(4);
  cfg.set("train.lr", "0");
  cfg.set("gradnorm.lr_w", "0");
  const auto once = run_pipeline(cfg);
  cfg.set("train.epochs_per_day", "3");
  const auto thrice = run_pipeline(cfg);
  REQUIRE(once.days.size() == 3);
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(once.days[d].auc == thrice.days[d].auc);
    CHECK(once.days[d].stay_auc == thrice.days[d].stay_auc);
  }
}

TEST_CASE("identical seeds give identical reports in every mode") {
  for (const char* mode : {"e2e", "cascaded", "e2e-no-gradnorm", "cascaded-naive"}) {
    CAPTURE(mode);
    auto cfg = small_run(2);
    cfg.set("train.mode", mode);
    const auto a = run_pipeline(cfg);
    const auto b = run_pipeline(cfg);
    REQUIRE(a.days.size() == b.days.size());
    for (std::size_t d = 0; d < a.days.size(); ++d) {
      CHECK(a.days[d].auc == b.days[d].auc);
      CHECK(a.days[d].mean_ssl_loss == b.days[d].mean_ssl_loss);
      CHECK(a.days[d].w_ssl == b.days[d].w_ssl);
    }
    CHECK(a.steps.size() == b.steps.size());
  }
}

TEST_CASE("cascaded stage B never touches the encoder; fixed-weight modes keep weights") {
  auto cfg = small_run(3);
  cfg.set("train.mode", "cascaded");
  CHECK(run_pipeline(cfg).frozen_grad_max == 0.0);
  cfg.set("train.mode", "e2e-no-gradnorm");
  for (const auto& d : run_pipeline(cfg).days) {
    CHECK(d.w_ssl == 1.0);
    CHECK(d.w_ltr == 1.0);
  }
  cfg.set("train.mode", "e2e");
  for (const auto& d : run_pipeline(cfg).days) CHECK(d.w_ssl + d.w_ltr == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("gradient coupling checks") {
  ModelConfig mc;
  mc.rank.input_dim = 8;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = coupling_check(mc, seed);
    CHECK(r.cascaded_encoder_grad_norm == 0.0);
    CHECK(r.e2e_encoder_grad_norm > 1e-6);
    CHECK(r.head_grad_shift > 1e-6);
    CHECK(r.pass());
  }
  mc.encoder.backbone = Backbone::kSage;
  CHECK(coupling_check(mc, 9).pass());
}

TEST_CASE("subspace checks") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = subspace_check_random(seed);
    CHECK(r.max_kernel_grad <= 1e-10);
    CHECK(r.bpr_relative_change <= 1e-12);
    CHECK(r.decoder_residual <= 1e-8);
    CHECK(r.projection_residual <= 1e-8);
  }
  Rng rng(1);
  const Tensor z = e2eg::testing::random_tensor({4, 2}, rng);
  CHECK_THROWS_AS(subspace_check(z, Tensor({2, 1}), {{0, 1}}, z, 1), Error);
}

TEST_CASE("verification suite passes with the default config") {
  for (const auto& c : verify_theorems(RunConfig{}, 1)) {
    CAPTURE(c.name);
    CAPTURE(c.detail);
    CHECK(c.pass);
  }
}
