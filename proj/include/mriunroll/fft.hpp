// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mriunroll/tensor.hpp"

namespace mriunroll {

bool is_power_of_two(std::size_t n);

// Orthonormal 2D DFT over the last two axes; every leading axis is a batch.
// Both extents must be powers of two (UnsupportedSizeError otherwise).
ComplexTensor fft2(const ComplexTensor& x);
ComplexTensor ifft2(const ComplexTensor& x);

}  // namespace mriunroll
