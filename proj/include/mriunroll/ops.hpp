// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>

#include "mriunroll/autodiff.hpp"

namespace mriunroll {

// Value-level helpers shared with the sensing model.
ComplexTensor apply_mask(const ComplexTensor& x, const ComplexTensor& mask);
ComplexTensor coil_expand_values(const ComplexTensor& x, const ComplexTensor& maps);
ComplexTensor coil_combine_values(const ComplexTensor& y, const ComplexTensor& maps);

}  // namespace mriunroll

// Differentiable primitives recorded on a Tape.
//
// Saved-activation schedule (elements counted on the meter per node):
//   add, sub, scale            nothing
//   cmul(a, b)                 numel(b) if a needs grad, + numel(a) if b does
//   conv2d(x, w)               numel(x) if w needs grad; w itself when x needs
//                              grad and w is not a Parameter (parameters are
//                              weight storage, not activations)
//   relu(x)                    sign mask, numel(x)
//   fft2, ifft2                nothing
//   mask_apply, coil_expand,
//   coil_combine               nothing (hold references to model constants)
//   to_channels, from_channels nothing
//   sum_real                   nothing
//   squared_norm(x)            numel(x)
//   l1_complex(pred, target)   residual phase, numel(pred)
namespace mriunroll::ad {

Var add(Tape& tape, const Var& a, const Var& b);
Var sub(Tape& tape, const Var& a, const Var& b);
Var scale(Tape& tape, const Var& a, cdouble s);
Var cmul(Tape& tape, const Var& a, const Var& b);
Var conv2d(Tape& tape, const Var& x, const Var& w);
// Real ReLU: max(Re x, 0); imaginary parts are dropped.
Var relu(Tape& tape, const Var& x);
Var fft2(Tape& tape, const Var& x);
Var ifft2(Tape& tape, const Var& x);
// Multiplies the last two axes by a real (H, W) mask.
Var mask_apply(Tape& tape, const Var& x, std::shared_ptr<const ComplexTensor> mask);
// (H, W) image times (C, H, W) coil maps -> (C, H, W).
Var coil_expand(Tape& tape, const Var& x, std::shared_ptr<const ComplexTensor> maps);
// sum_c conj(maps_c) * y_c : (C, H, W) -> (H, W).
Var coil_combine(Tape& tape, const Var& y, std::shared_ptr<const ComplexTensor> maps);
// Complex (..., H, W) -> real two-channel (1, 2, H, W) view [Re, Im].
Var to_channels(Tape& tape, const Var& x);
// Real (1, 2, H, W) -> complex (H, W).
Var from_channels(Tape& tape, const Var& x);
// Scalar Re(sum x).
Var sum_real(Tape& tape, const Var& x);
// Scalar sum |x|^2.
Var squared_norm(Tape& tape, const Var& x);
// Scalar mean |pred - target| over complex entries. Subgradient 0 at exact
// zeros of the residual.
Var l1_complex(Tape& tape, const Var& pred, const Var& target);

}  // namespace mriunroll::ad
