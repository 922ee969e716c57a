// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mriunroll/tensor.hpp"

namespace mriunroll {

// Real 2D cross-correlation, stride 1, zero "same" padding, odd square
// kernels. x: (B, Cin, H, W), w: (Cout, Cin, K, K) -> (B, Cout, H, W).
// Only real parts are read; outputs are real.
ComplexTensor conv2d(const ComplexTensor& x, const ComplexTensor& w);
// Adjoint with respect to the input.
ComplexTensor conv2d_input_grad(const ComplexTensor& grad_out, const ComplexTensor& w,
                                const Shape& input_shape);
ComplexTensor conv2d_weight_grad(const ComplexTensor& grad_out, const ComplexTensor& x,
                                 const Shape& weight_shape);

Shape conv2d_output_shape(const Shape& x, const Shape& w);

}  // namespace mriunroll
