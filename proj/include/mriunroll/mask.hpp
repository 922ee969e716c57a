// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "mriunroll/tensor.hpp"

namespace mriunroll {

enum class MaskKind { poisson_disc_2d, random_1d_cartesian };

std::string to_string(MaskKind kind);
MaskKind mask_kind_from_string(const std::string& name);

struct MaskSpec {
  MaskKind kind = MaskKind::poisson_disc_2d;
  std::size_t height = 64;
  std::size_t width = 64;
  double acceleration = 4.0;
  // Side of the fully sampled low-frequency square (2D) or number of
  // low-frequency columns (1D).
  std::size_t calibration = 8;
  std::uint64_t seed = 0;
};

/// Undersampling mask in unshifted FFT layout. Deterministic for a fixed
/// seed; the achieved acceleration lies within 10% of the request. The 2D
/// variant uses Bridson dart throwing with the radius bisected to hit the
/// target sample count; the 1D variant samples whole columns (phase-encode
/// lines along the last axis).
ComplexTensor make_mask(const MaskSpec& spec);

// Number of locations divided by number of sampled locations.
double mask_acceleration(const ComplexTensor& mask);

}  // namespace mriunroll
