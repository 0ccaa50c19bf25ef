// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "e2egrec/autograd.hpp"

namespace e2eg {

enum class DecoderKind { kIdentity, kLinear };

struct DecoderSpec {
  DecoderKind kind = DecoderKind::kIdentity;
  /// k x d weight for the linear decoder (X_hat = Z * W_d).
  std::optional<Var> weight;

  static DecoderSpec identity() { return {}; }
  static DecoderSpec linear(Var w) { return {DecoderKind::kLinear, w}; }
};

/// ||X - dec(Z)||_F^2 averaged over the n rows.
Var gfae_loss(Var target, Var z, const DecoderSpec& dec = DecoderSpec::identity());

/// The gathered input rows as a gradient-blocked reconstruction target.
Var reconstruction_target(Var h0);

}  // namespace e2eg
