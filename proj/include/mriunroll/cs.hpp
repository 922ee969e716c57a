// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "mriunroll/sensing.hpp"

namespace mriunroll {

// Orthonormal 2D Haar transform over `levels` levels, coefficients in the
// usual nested layout (coarsest approximation in the top-left corner).
// Extents must be divisible by 2^levels.
ComplexTensor wavelet2(const ComplexTensor& x, int levels);
ComplexTensor iwavelet2(const ComplexTensor& c, int levels);

// c * max(1 - tau/|c|, 0), entrywise.
ComplexTensor soft_threshold(const ComplexTensor& c, double tau);

struct CsConfig {
  double lambda = 0.01;
  int iterations = 100;
  int levels = 3;
  double step = 1.0;

  void validate() const;
};

struct CsResult {
  ComplexTensor image;
  // Objective 1/2 ||Ax - y||^2 + lambda ||W x||_1 at x_0 = 0 and after each
  // iteration.
  std::vector<double> objective;
};

double cs_objective(const SensingModel& model, const ComplexTensor& y, const ComplexTensor& x,
                    const CsConfig& cfg);

// Proximal gradient (ISTA) from x = 0.
CsResult cs_reconstruct(const SensingModel& model, const ComplexTensor& y, const CsConfig& cfg);

}  // namespace mriunroll
