// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance harness: one PASS/FAIL line per criterion. Exits non-zero if any
// criterion fails. Pass a criterion number (1-8) to run only that one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "e2egrec/autograd.hpp"
#include "e2egrec/config.hpp"
#include "e2egrec/pipeline.hpp"
#include "e2egrec/trainer.hpp"
#include "gradnorm_toy.hpp"
#include "model_fixture.hpp"
#include "sampler_oracle.hpp"
#include "swing_oracle.hpp"

using namespace e2eg;
using namespace e2eg::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Reverse-mode gradients vs central differences.
Outcome gradient_correctness() {
  auto sparse = std::make_shared<SparseMatrix>();
  sparse->rows = 3;
  sparse->cols = 4;
  sparse->offsets = {0, 2, 3, 5};
  sparse->indices = {0, 3, 1, 0, 2};
  sparse->values = {0.5, -1.0, 2.0, 0.25, 1.5};
  using Build = std::function<Var(Var, Var)>;
  const std::vector<std::tuple<const char*, Build, Shape, Shape>> prims = {
      {"matmul", [](Var a, Var b) { return ops::matmul(a, b); }, {3, 4}, {4, 2}},
      {"add", [](Var a, Var b) { return ops::add(a, b); }, {3, 4}, {3, 4}},
      {"sub", [](Var a, Var b) { return ops::sub(a, b); }, {3, 4}, {3, 4}},
      {"add_row_bias", [](Var a, Var b) { return ops::add_row_bias(a, b); }, {3, 4}, {4}},
      {"mul", [](Var a, Var b) { return ops::mul(a, b); }, {3, 4}, {3, 4}},
      {"scale", [](Var a, Var) { return ops::scale(a, -1.7); }, {3, 4}, {1}},
      {"scale_rows", [](Var a, Var b) { return ops::scale_rows(a, b); }, {3, 4}, {3}},
      {"concat_cols", [](Var a, Var b) { return ops::concat_cols({a, b}); }, {3, 2}, {3, 4}},
      {"slice_cols", [](Var a, Var) { return ops::slice_cols(a, 1, 2); }, {3, 4}, {1}},
      {"reshape", [](Var a, Var) { return ops::reshape(a, {2, 6}); }, {3, 4}, {1}},
      {"sigmoid", [](Var a, Var) { return ops::sigmoid(a); }, {3, 4}, {1}},
      {"relu", [](Var a, Var) { return ops::relu(a); }, {3, 4}, {1}},
      {"softplus", [](Var a, Var) { return ops::softplus(a); }, {3, 4}, {1}},
      {"row_softmax", [](Var a, Var) { return ops::row_softmax(a); }, {3, 4}, {1}},
      {"sum_axis", [](Var a, Var) { return ops::sum_axis(a, 0); }, {3, 4}, {1}},
      {"mean_axis", [](Var a, Var) { return ops::mean_axis(a, 1); }, {2, 3, 4}, {1}},
      {"sum_all", [](Var a, Var) { return ops::sum_all(a); }, {3, 4}, {1}},
      {"sq_frobenius", [](Var a, Var) { return ops::sq_frobenius(a); }, {3, 4}, {1}},
      {"bce", [](Var a, Var) { return ops::bce(ops::sigmoid(a), Tensor::vector({1, 0, 1, 0})); }, {4}, {1}},
      {"weighted_sum", [](Var a, Var b) { return ops::weighted_sum({a, b}, {0.3, -2.0}); }, {3, 4}, {3, 4}},
      {"stack", [](Var a, Var b) { return ops::stack({a, b}); }, {3, 4}, {3, 4}},
      {"unstack", [](Var a, Var) { return ops::unstack(a, 1); }, {3, 2, 4}, {1}},
      {"gather_rows", [](Var a, Var) { return ops::gather_rows(a, {2, 0, 2}); }, {3, 4}, {1}},
      {"spmm", [sparse](Var a, Var) { return ops::spmm(sparse, a); }, {4, 2}, {1}},
  };
  double worst = 0.0;
  std::string worst_name = "-";
  auto consider = [&](double err, const std::string& name) {
    if (err > worst || std::isnan(err)) {
      worst = err;
      worst_name = name;
    }
  };
  for (const auto& [name, build, sa, sb] : prims)
    for (std::uint64_t point = 0; point < 20; ++point) {
      Rng rng(500 + point);
      ParameterSet ps;
      auto& a = ps.add("a", random_tensor(sa, rng));
      auto& b = ps.add("b", random_tensor(sb, rng));
      auto objective = [&](ComputeGraph& g) {
        Var out = build(g.parameter(a), g.parameter(b));
        Rng probe(900 + point);
        return ops::sum_all(ops::mul(out, g.constant(random_tensor(out.shape(), probe))));
      };
      ComputeGraph g;
      g.backward(objective(g));
      const auto numeric = finite_difference_gradient(
          [&] {
            ComputeGraph h;
            return objective(h).value().item();
          },
          ps, 1e-6);
      consider(max_rel_error(collect_gradients(ps), numeric), name);
    }
  for (std::uint64_t point = 0; point < 20; ++point) {
    const auto backbone = point % 2 ? Backbone::kSage : Backbone::kLightGcn;
    ModelFixture fx(100 + point, backbone, UpperFusion::kAttn);
    auto& params = fx.model->params();
    params.zero_grad();
    ComputeGraph g;
    g.backward(fx.total(g));
    const auto numeric = finite_difference_gradient(
        [&] {
          ComputeGraph h;
          return fx.total(h).value().item();
        },
        params, 1e-6);
    consider(max_rel_error(collect_gradients(params), numeric), "composed");
  }
  return {worst <= 1e-4, fmt("%zu primitives + composed loss x 20 points; max rel err %.3g (%s)", prims.size(),
                             worst, worst_name.c_str())};
}

// 2. Gradient coupling.
Outcome coupling() {
  ModelConfig mc;
  mc.rank.input_dim = 8;
  std::size_t casc = 0, e2e = 0, shift = 0;
  double e2e_min = 1e300, shift_min = 1e300;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = coupling_check(mc, seed);
    casc += r.cascaded_encoder_grad_norm == 0.0;
    e2e += r.e2e_encoder_grad_norm > 1e-6;
    shift += r.head_grad_shift > 1e-6;
    e2e_min = std::min(e2e_min, r.e2e_encoder_grad_norm);
    shift_min = std::min(shift_min, r.head_grad_shift);
  }
  return {casc == 20 && e2e == 20 && shift == 20,
          fmt("cascaded ==0: %zu/20, e2e >1e-6: %zu/20 (min %.3g), head shift >1e-6: %zu/20 (min %.3g)", casc, e2e,
              e2e_min, shift, shift_min)};
}

// 3. Subspace properties.
Outcome subspace() {
  double kern = 0, change = 0, proj = 0, dec = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = subspace_check_random(seed);
    kern = std::max(kern, r.max_kernel_grad);
    change = std::max(change, r.bpr_relative_change);
    proj = std::max(proj, r.projection_residual);
    dec = std::max(dec, r.decoder_residual);
  }
  return {kern <= 1e-10 && change <= 1e-12 && proj <= 1e-8 && dec <= 1e-8,
          fmt("20 seeds: kernel grad %.3g, BPR rel change %.3g, decoder residual %.3g, projection residual %.3g",
              kern, change, dec, proj)};
}

// 4. Swing vs brute force.
Outcome swing() {
  double worst = 0.0;
  std::size_t edges = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(7000 + seed);
    const auto log = random_log(rng, 50, 30);
    const auto g = build_swing_graph(log, 1.0, 1000, 30);
    const auto brute = brute_force_swing(log, 1.0, 30);
    edges += g.num_edges();
    for (std::uint64_t i = 0; i < 30; ++i)
      for (std::uint64_t j = 0; j < 30; ++j) worst = std::max(worst, std::abs(g.weight(i, j) - brute[i][j]));
  }
  return {worst <= 1e-12, fmt("50 logs, %zu edges total; max |diff| %.3g", edges, worst)};
}

// 5. Sampler distribution.
Outcome sampler() {
  std::size_t passed = 0, total = 0;
  double worst_ratio = 0.0;
  for (std::uint64_t v = 0; v < 10; ++v) {
    Rng rng(8000 + v);
    std::vector<double> w(2 + rng.below(7));
    for (auto& x : w) x = rng.uniform(0.05, 5.0);
    for (double beta : {0.0, 0.5, 1.0, 2.0}) {
      const auto r = sampler_chi_square(w, beta, 100000, 8100 + v * 10 + static_cast<std::uint64_t>(beta * 2));
      passed += r.pass();
      ++total;
      worst_ratio = std::max(worst_ratio, r.statistic / r.critical);
    }
  }
  return {passed == total,
          fmt("%zu/%zu fits pass at alpha 0.001 (100k draws each); max chi2/critical %.3f", passed, total, worst_ratio)};
}

// 6. GradNorm behaviour.
Outcome gradnorm() {
  double sum_err = 0.0, id_err = 0.0;
  for (const auto& w : gradnorm_toy(1.0, 100)) {
    sum_err = std::max(sum_err, std::abs(w[0] + w[1] - 2.0));
    id_err = std::max({id_err, std::abs(w[0] - 1.0), std::abs(w[1] - 1.0)});
  }
  const auto fast = gradnorm_toy(10.0, 50);
  bool monotone = true;
  double prev = 1.0;
  for (std::size_t t = 0; t < fast.size(); ++t) {
    sum_err = std::max(sum_err, std::abs(fast[t][0] + fast[t][1] - 2.0));
    // Step 0 only records the initial losses (ratios are all 1).
    if (t == 0 ? fast[t][0] > prev : fast[t][0] >= prev) monotone = false;
    prev = fast[t][0];
  }
  return {sum_err <= 1e-12 && id_err <= 1e-6 && monotone,
          fmt("max |sum-2| %.3g; identical tasks max |w-1| %.3g; fast-task weight %s 1 -> %.4f over 50 steps", sum_err,
              id_err, monotone ? "decreasing" : "NOT monotone", fast.back()[0])};
}

// 7. Directional end-to-end result.
Outcome directional() {
  const auto t0 = std::chrono::steady_clock::now();
  auto run = [](std::uint64_t seed, std::size_t clusters, const char* mode, const char* fusion) {
    RunConfig cfg;
    cfg.set("seed", std::to_string(seed));
    cfg.set("synth.num_clusters", std::to_string(clusters));
    cfg.set("train.mode", mode);
    cfg.set("train.fusion", fusion);
    return run_pipeline(cfg).mean_auc();
  };
  double attn = 0, gate = 0, casc = 0, null_e2e = 0, null_casc = 0;
  std::size_t seeds_ordered = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double a = run(seed, 8, "e2e", "attn"), g = run(seed, 8, "e2e", "gate"), c = run(seed, 8, "cascaded", "attn");
    const double na = run(seed, 1, "e2e", "attn"), nc = run(seed, 1, "cascaded", "attn");
    std::printf("    seed %llu: C=8 e2e(attn) %.4f e2e(gate) %.4f cascaded %.4f | C=1 e2e(attn) %.4f cascaded %.4f\n",
                static_cast<unsigned long long>(seed), a, g, c, na, nc);
    std::fflush(stdout);
    seeds_ordered += a >= g && g >= c;
    attn += a / 5;
    gate += g / 5;
    casc += c / 5;
    null_e2e += na / 5;
    null_casc += nc / 5;
  }
  const double secs = seconds_since(t0);
  const bool order = attn >= gate && gate >= casc;
  const bool margin = attn - casc >= 0.005;
  const bool null_ok = std::abs(null_e2e - null_casc) <= 0.005;
  return {order && margin && null_ok && secs < 600.0,
          fmt("mean AUC e2e(attn) %.4f %s e2e(gate) %.4f %s cascaded %.4f; attn-cascaded %+.4f (need >= 0.005); "
              "null lift %+.4f (need |.| <= 0.005); %.0f s",
              attn, attn >= gate ? ">=" : "<", gate, gate >= casc ? ">=" : "<", casc, attn - casc,
              null_e2e - null_casc, secs)};
}

// 8. Determinism.
Outcome determinism() {
  std::size_t compared = 0;
  bool same = true;
  for (const char* mode : {"e2e", "cascaded"}) {
    RunConfig cfg;
    cfg.set("seed", "11");
    cfg.set("synth.days", "3");
    cfg.set("train.mode", mode);
    const auto a = format_report_jsonl(bundle(run_pipeline(cfg), cfg));
    const auto b = format_report_jsonl(bundle(run_pipeline(cfg), cfg));
    same = same && a == b;
    compared += static_cast<std::size_t>(std::count(a.begin(), a.end(), '\n'));
  }
  return {same, fmt("two runs per mode (e2e, cascaded): %zu report records %s", compared,
                    same ? "bit-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"gradient coupling (cascaded zero, e2e nonzero)", coupling},
      {"ranking/reconstruction subspace properties", subspace},
      {"swing oracle equivalence", swing},
      {"sampler distribution", sampler},
      {"gradnorm behaviour", gradnorm},
      {"directional end-to-end result", directional},
      {"determinism", determinism},
  };
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<std::size_t>(only) != i + 1) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %zu: %s -- %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
