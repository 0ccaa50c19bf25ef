// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "e2egrec/autograd.hpp"
#include "e2egrec/rng.hpp"

namespace e2eg {

/// Sigmoid gate over a concatenated feature block.
struct GateParams {
  Parameter* weight = nullptr;  ///< d_cat x d_cat
  Parameter* bias = nullptr;    ///< d_cat

  static GateParams create(ParameterSet& params, const std::string& prefix, std::size_t d_cat, Rng& rng);
};

/// sigmoid(F_cat W_g + b_g) * F_cat, elementwise.
Var gate_fuse(Var f_cat, Var weight, Var bias);
Var gate_fuse(ComputeGraph& g, Var f_cat, const GateParams& p);

/// Multi-head self-attention over feature tokens.
struct AttnParams {
  std::size_t heads = 1;
  std::vector<Parameter*> query, key, value;  ///< one d x d/H projection per head
  Parameter* output = nullptr;                ///< d x d

  static AttnParams create(ParameterSet& params, const std::string& prefix, std::size_t dim, std::size_t heads,
                           Rng& rng);
};

struct AttnVars {
  std::vector<Var> query, key, value;
  Var output;
};

AttnVars bind(ComputeGraph& g, const AttnParams& p);

/// Mean over tokens of (MHSA(F_stack) + F_stack), F_stack of shape N x T x d.
Var attn_fuse(Var f_stack, const AttnVars& p);

/// Per-source linear map into the common token width (no bias).
Var project_to_common(Var f, Var map);

/// Identity when d_in == d_out, otherwise uniform(+-1/sqrt(d_in)).
Tensor init_projection(std::size_t d_in, std::size_t d_out, Rng& rng);

}  // namespace e2eg
