// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>
#include <memory>

#include "doctest.h"
#include "e2egrec/autograd.hpp"
#include "e2egrec/error.hpp"
#include "test_util.hpp"

using namespace e2eg;
using e2eg::testing::max_rel_error;
using e2eg::testing::random_tensor;

TEST_CASE("tensor forward examples") {
  ComputeGraph g;
  CHECK(ops::sigmoid(g.constant(Tensor::scalar(0.0))).value().item() == doctest::Approx(0.5));

  const auto sm = ops::row_softmax(g.constant(Tensor::matrix(1, 3, {2.5, 2.5, 2.5}))).value();
  for (std::size_t i = 0; i < 3; ++i) CHECK(sm[i] == doctest::Approx(1.0 / 3.0));

  Rng rng(3);
  const Tensor m = random_tensor({3, 4}, rng);
  const auto prod = ops::matmul(g.constant(Tensor::identity(3)), g.constant(m)).value();
  CHECK(prod.max_abs_diff(m) == 0.0);
}

TEST_CASE("shape mismatches are reported") {
  ComputeGraph g;
  auto a = g.constant(Tensor({2, 3}));
  auto b = g.constant(Tensor({2, 3}));
  CHECK_THROWS_AS(ops::matmul(a, b), ShapeError);
  CHECK_THROWS_AS(ops::add(a, g.constant(Tensor({3, 2}))), ShapeError);
}

TEST_CASE("backward examples") {
  ParameterSet ps;
  auto& x = ps.add("x", Tensor::scalar(3.0));
  {
    ComputeGraph g;
    auto v = g.parameter(x);
    g.backward(ops::mul(v, v));
    CHECK(x.grad.item() == doctest::Approx(6.0));
  }
  {
    auto& z = ps.add("z", Tensor::scalar(0.0));
    ComputeGraph g;
    g.backward(ops::sigmoid(g.parameter(z)));
    CHECK(z.grad.item() == doctest::Approx(0.25));
  }
  {
    ParameterSet p2;
    auto& m = p2.add("m", Tensor::matrix(2, 2, {1, 2, 3, 4}));
    ComputeGraph g;
    auto v = g.parameter(m);
    g.backward(ops::sq_frobenius(ops::sub(v, v)));
    CHECK(m.grad.norm() == 0.0);
  }
}

TEST_CASE("parameter gradients accumulate; probe passes leave them alone") {
  ParameterSet ps;
  auto& x = ps.add("x", Tensor::scalar(2.0));
  for (int k = 0; k < 2; ++k) {
    ComputeGraph g;
    g.backward(ops::scale(g.parameter(x), 3.0));
  }
  CHECK(x.grad.item() == doctest::Approx(6.0));
  ComputeGraph g;
  auto v = g.parameter(x);
  g.backward(ops::scale(v, 5.0), /*accumulate_params=*/false);
  CHECK(x.grad.item() == doctest::Approx(6.0));
  CHECK(g.grad(v).item() == doctest::Approx(5.0));
}

TEST_CASE("stop_gradient blocks flow") {
  ParameterSet ps;
  auto& x = ps.add("x", Tensor::scalar(1.5));
  ComputeGraph g;
  auto v = g.parameter(x);
  g.backward(ops::mul(v, ops::stop_gradient(v)));
  CHECK(x.grad.item() == doctest::Approx(1.5));
}

TEST_CASE("finite difference oracle examples") {
  ParameterSet ps;
  auto& x = ps.add("x", Tensor::scalar(3.0));
  auto fd = finite_difference_gradient([&] { return x.value.item() * x.value.item(); }, ps, 1e-5);
  CHECK(std::abs(fd.at("x").item() - 6.0) <= 1e-8);
  CHECK(x.value.item() == 3.0);

  auto zero = finite_difference_gradient([] { return 4.0; }, ps);
  CHECK(zero.at("x").item() == 0.0);

  auto& z = ps.add("z", Tensor::scalar(0.0));
  auto bce_fd = finite_difference_gradient(
      [&] {
        ComputeGraph g;
        return ops::bce(ops::sigmoid(g.constant(z.value)), Tensor::vector({1.0})).value().item();
      },
      ps, 1e-5);
  CHECK(std::abs(bce_fd.at("z").item() + 0.5) <= 1e-6);
}

namespace {

struct OpCase {
  const char* name;
  std::function<Var(ComputeGraph&, Var, Var)> build;  // (a, b) -> scalar
  Shape a_shape, b_shape;
};

Var dot_reduce(ComputeGraph& g, Var out, Rng& rng) {
  // Random linear functional keeps every output coordinate's gradient distinct.
  Tensor w = random_tensor(out.shape(), rng);
  return ops::sum_all(ops::mul(out, g.constant(std::move(w))));
}

}  // namespace

TEST_CASE("every primitive matches central differences at 20 random points") {
  auto sparse = std::make_shared<SparseMatrix>();
  sparse->rows = 3;
  sparse->cols = 4;
  sparse->offsets = {0, 2, 3, 5};
  sparse->indices = {0, 3, 1, 0, 2};
  sparse->values = {0.5, -1.0, 2.0, 0.25, 1.5};

  const std::vector<OpCase> cases = {
      {"matmul", [](ComputeGraph&, Var a, Var b) { return ops::matmul(a, b); }, {3, 4}, {4, 2}},
      {"add", [](ComputeGraph&, Var a, Var b) { return ops::add(a, b); }, {3, 4}, {3, 4}},
      {"sub", [](ComputeGraph&, Var a, Var b) { return ops::sub(a, b); }, {3, 4}, {3, 4}},
      {"add_row_bias", [](ComputeGraph&, Var a, Var b) { return ops::add_row_bias(a, b); }, {3, 4}, {4}},
      {"mul", [](ComputeGraph&, Var a, Var b) { return ops::mul(a, b); }, {3, 4}, {3, 4}},
      {"scale", [](ComputeGraph&, Var a, Var) { return ops::scale(a, -1.7); }, {3, 4}, {1}},
      {"scale_rows", [](ComputeGraph&, Var a, Var b) { return ops::scale_rows(a, b); }, {3, 4}, {3}},
      {"concat_cols", [](ComputeGraph&, Var a, Var b) { return ops::concat_cols({a, b, a}); }, {3, 2}, {3, 4}},
      {"slice_cols", [](ComputeGraph&, Var a, Var) { return ops::slice_cols(a, 1, 2); }, {3, 4}, {1}},
      {"reshape", [](ComputeGraph&, Var a, Var) { return ops::reshape(a, {2, 6}); }, {3, 4}, {1}},
      {"sigmoid", [](ComputeGraph&, Var a, Var) { return ops::sigmoid(a); }, {3, 4}, {1}},
      {"relu", [](ComputeGraph&, Var a, Var) { return ops::relu(a); }, {3, 4}, {1}},
      {"softplus", [](ComputeGraph&, Var a, Var) { return ops::softplus(a); }, {3, 4}, {1}},
      {"row_softmax", [](ComputeGraph&, Var a, Var) { return ops::row_softmax(a); }, {3, 4}, {1}},
      {"sum_axis0", [](ComputeGraph&, Var a, Var) { return ops::sum_axis(a, 0); }, {3, 4}, {1}},
      {"sum_axis1", [](ComputeGraph&, Var a, Var) { return ops::sum_axis(a, 1); }, {3, 4}, {1}},
      {"mean_axis", [](ComputeGraph&, Var a, Var) { return ops::mean_axis(a, 1); }, {2, 3, 4}, {1}},
      {"sum_all", [](ComputeGraph&, Var a, Var) { return ops::sum_all(a); }, {3, 4}, {1}},
      {"sq_frobenius", [](ComputeGraph&, Var a, Var) { return ops::sq_frobenius(a); }, {3, 4}, {1}},
      {"bce",
       [](ComputeGraph&, Var a, Var) { return ops::bce(ops::sigmoid(a), Tensor::vector({1, 0, 1, 0, 0, 1})); },
       {6},
       {1}},
      {"weighted_sum", [](ComputeGraph&, Var a, Var b) { return ops::weighted_sum({a, b}, {0.3, -2.0}); }, {3, 4}, {3, 4}},
      {"stack", [](ComputeGraph&, Var a, Var b) { return ops::stack({a, b, a}); }, {3, 4}, {3, 4}},
      {"unstack", [](ComputeGraph&, Var a, Var) { return ops::unstack(a, 1); }, {3, 2, 4}, {1}},
      {"gather_rows", [](ComputeGraph&, Var a, Var) { return ops::gather_rows(a, {2, 0, 2, 1}); }, {3, 4}, {1}},
      {"spmm", [sparse](ComputeGraph&, Var a, Var) { return ops::spmm(sparse, a); }, {4, 2}, {1}},
  };

  for (const auto& c : cases) {
    CAPTURE(c.name);
    for (std::uint64_t point = 0; point < 20; ++point) {
      Rng rng(1000 + point);
      ParameterSet ps;
      auto& a = ps.add("a", random_tensor(c.a_shape, rng));
      auto& b = ps.add("b", random_tensor(c.b_shape, rng));
      const std::uint64_t probe_seed = 77 + point;
      auto objective = [&](ComputeGraph& g) {
        Rng probe(probe_seed);
        return dot_reduce(g, c.build(g, g.parameter(a), g.parameter(b)), probe);
      };
      ComputeGraph g;
      g.backward(objective(g));
      const auto analytic = collect_gradients(ps);
      const auto numeric = finite_difference_gradient(
          [&] {
            ComputeGraph h;
            return objective(h).value().item();
          },
          ps, 1e-6);
      CHECK(max_rel_error(analytic, numeric) <= 1e-4);
    }
  }
}
