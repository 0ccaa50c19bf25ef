// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2egrec/gfae.hpp"

#include "e2egrec/error.hpp"

namespace e2eg {

Var gfae_loss(Var target, Var z, const DecoderSpec& dec) {
  Var recon = z;
  if (dec.kind == DecoderKind::kLinear) {
    if (!dec.weight) throw Error(ErrorCode::kInvalidArgument, "linear decoder requires a weight");
    recon = ops::matmul(z, *dec.weight);
  }
  if (recon.shape() != target.shape())
    throw ShapeError("gfae_loss: reconstruction " + shape_str(recon.shape()) + " vs target " +
                     shape_str(target.shape()));
  const double n = static_cast<double>(target.shape()[0]);
  return ops::scale(ops::sq_frobenius(ops::sub(target, recon)), 1.0 / n);
}

Var reconstruction_target(Var h0) { return ops::stop_gradient(h0); }

}  // namespace e2eg
