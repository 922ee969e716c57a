// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "mriunroll/tensor.hpp"

namespace mriunroll {

/// Synthetic receive sensitivities: smooth Gaussian magnitude profiles centred
/// around the field of view with slowly varying phase, normalized pixelwise
/// so that sum_c |S_c|^2 = 1. A single coil is the constant map 1.
ComplexTensor make_coil_maps(std::size_t coils, std::size_t height, std::size_t width,
                             std::uint64_t seed);

}  // namespace mriunroll
