// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2egrec/fusion.hpp"

#include <cmath>

#include "e2egrec/error.hpp"

namespace e2eg {

namespace {
Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}
}  // namespace

GateParams GateParams::create(ParameterSet& params, const std::string& prefix, std::size_t d_cat, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_cat));
  GateParams p;
  p.weight = &params.add(prefix + ".W", uniform_tensor({d_cat, d_cat}, bound, rng));
  p.bias = &params.add(prefix + ".b", uniform_tensor({d_cat}, bound, rng));
  return p;
}

Var gate_fuse(Var f_cat, Var weight, Var bias) {
  const auto& fs = f_cat.shape();
  const auto& ws = weight.shape();
  if (fs.size() != 2 || ws.size() != 2 || ws[0] != fs[1] || ws[1] != fs[1])
    throw ShapeError("gate_fuse: features " + shape_str(fs) + " need a square gate of width " +
                     std::to_string(fs.size() == 2 ? fs[1] : 0) + ", got " + shape_str(ws));
  Var gate = ops::sigmoid(ops::add_row_bias(ops::matmul(f_cat, weight), bias));
  return ops::mul(gate, f_cat);
}

Var gate_fuse(ComputeGraph& g, Var f_cat, const GateParams& p) {
  return gate_fuse(f_cat, g.parameter(*p.weight), g.parameter(*p.bias));
}

AttnParams AttnParams::create(ParameterSet& params, const std::string& prefix, std::size_t dim, std::size_t heads,
                              Rng& rng) {
  if (heads == 0 || dim % heads != 0)
    throw Error(ErrorCode::kInvalidArgument,
                "attention width " + std::to_string(dim) + " is not divisible by " + std::to_string(heads) + " heads");
  AttnParams p;
  p.heads = heads;
  const std::size_t dh = dim / heads;
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t h = 0; h < heads; ++h) {
    const std::string tag = std::to_string(h);
    p.query.push_back(&params.add(prefix + ".Wq" + tag, uniform_tensor({dim, dh}, bound, rng)));
    p.key.push_back(&params.add(prefix + ".Wk" + tag, uniform_tensor({dim, dh}, bound, rng)));
    p.value.push_back(&params.add(prefix + ".Wv" + tag, uniform_tensor({dim, dh}, bound, rng)));
  }
  p.output = &params.add(prefix + ".Wo", uniform_tensor({dim, dim}, bound, rng));
  return p;
}

AttnVars bind(ComputeGraph& g, const AttnParams& p) {
  AttnVars v;
  for (std::size_t h = 0; h < p.heads; ++h) {
    v.query.push_back(g.parameter(*p.query[h]));
    v.key.push_back(g.parameter(*p.key[h]));
    v.value.push_back(g.parameter(*p.value[h]));
  }
  v.output = g.parameter(*p.output);
  return v;
}

Var attn_fuse(Var f_stack, const AttnVars& p) {
  const auto& s = f_stack.shape();
  if (s.size() != 3) throw ShapeError("attn_fuse: expected N x T x d, got " + shape_str(s));
  const std::size_t n = s[0], tokens = s[1], d = s[2];
  const std::size_t heads = p.query.size();
  if (heads == 0 || d % heads != 0)
    throw ShapeError("attn_fuse: width " + std::to_string(d) + " not divisible by " + std::to_string(heads) +
                     " heads");
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  std::vector<Var> x;
  for (std::size_t t = 0; t < tokens; ++t) x.push_back(ops::unstack(f_stack, t));

  // head_out[t][h]: N x dh
  std::vector<std::vector<Var>> head_out(tokens);
  for (std::size_t h = 0; h < heads; ++h) {
    std::vector<Var> q, k, v;
    for (std::size_t t = 0; t < tokens; ++t) {
      q.push_back(ops::matmul(x[t], p.query[h]));
      k.push_back(ops::matmul(x[t], p.key[h]));
      v.push_back(ops::matmul(x[t], p.value[h]));
    }
    for (std::size_t t = 0; t < tokens; ++t) {
      std::vector<Var> logits;
      for (std::size_t u = 0; u < tokens; ++u)
        logits.push_back(ops::reshape(ops::sum_axis(ops::mul(q[t], k[u]), 1), {n, 1}));
      Var attn = ops::row_softmax(ops::scale(ops::concat_cols(logits), inv_sqrt));
      std::vector<Var> mixed;
      for (std::size_t u = 0; u < tokens; ++u) mixed.push_back(ops::scale_rows(v[u], ops::slice_cols(attn, u, 1)));
      head_out[t].push_back(ops::weighted_sum(mixed, std::vector<double>(tokens, 1.0)));
    }
  }
  std::vector<Var> residual;
  for (std::size_t t = 0; t < tokens; ++t) {
    Var merged = heads == 1 ? head_out[t][0] : ops::concat_cols(head_out[t]);
    residual.push_back(ops::add(ops::matmul(merged, p.output), x[t]));
  }
  return ops::mean_axis(ops::stack(residual), 1);
}

Var project_to_common(Var f, Var map) { return ops::matmul(f, map); }

Tensor init_projection(std::size_t d_in, std::size_t d_out, Rng& rng) {
  if (d_in == d_out) return Tensor::identity(d_in);
  return uniform_tensor({d_in, d_out}, 1.0 / std::sqrt(static_cast<double>(d_in)), rng);
}

}  // namespace e2eg
