// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <vector>

#include "mriunroll/autodiff.hpp"
#include "mriunroll/tensor.hpp"

namespace mriunroll {

/// Multi-coil Cartesian measurement model A = mask * F * S.
///
/// The mask lives in unshifted FFT layout (DC at index (0, 0)). Coil maps are
/// normalized so that sum_c |S_c(p)|^2 = 1 at every pixel, which makes
/// ||A|| <= 1 and A^H A = I for a fully sampled mask. The model is immutable
/// once built and may be shared between threads.
class SensingModel {
 public:
  SensingModel(ComplexTensor mask, ComplexTensor coil_maps, double step_size = 0.5,
               double mu = 4.0);

  const ComplexTensor& mask() const { return *mask_; }
  const ComplexTensor& coil_maps() const { return *maps_; }
  const std::shared_ptr<const ComplexTensor>& shared_mask() const { return mask_; }
  const std::shared_ptr<const ComplexTensor>& shared_coil_maps() const { return maps_; }

  Shape image_shape() const { return {maps_->dim(1), maps_->dim(2)}; }
  Shape kspace_shape() const { return maps_->shape(); }
  std::size_t coils() const { return maps_->dim(0); }
  double step_size() const { return step_size_; }
  double mu() const { return mu_; }

  SensingModel with_mu(double mu) const;
  SensingModel with_step_size(double t) const;

  // Fraction of k-space locations sampled, inverted.
  double achieved_acceleration() const;

 private:
  std::shared_ptr<const ComplexTensor> mask_;
  std::shared_ptr<const ComplexTensor> maps_;
  double step_size_;
  double mu_;
};

ComplexTensor forward_A(const SensingModel& model, const ComplexTensor& x);
ComplexTensor adjoint_A(const SensingModel& model, const ComplexTensor& y);
// A^H A x
ComplexTensor normal_A(const SensingModel& model, const ComplexTensor& x);

// x - 2t A^H (A x - y)
ComplexTensor dc_step(const SensingModel& model, const ComplexTensor& x, const ComplexTensor& y);

struct CgResult {
  ComplexTensor x;
  // ||(A^H A + mu I) x_k - b|| / ||b|| after each iteration k = 1..n.
  std::vector<double> relative_residuals;
};

// Solves (A^H A + mu I) x = adjoint_y + mu z with `iterations` CG steps from
// x = 0, where adjoint_y = A^H y. Throws ConfigError when mu <= 0 or
// iterations < 1.
CgResult cg_solve(const SensingModel& model, const ComplexTensor& adjoint_y,
                  const ComplexTensor& z, int iterations);

// Recovers z from a solution x_next: (1/mu)((A^H A + mu I) x_next - A^H y).
ComplexTensor cg_inverse(const SensingModel& model, const ComplexTensor& x_next,
                         const ComplexTensor& adjoint_y);

namespace ad {

Var forward_A(Tape& tape, const SensingModel& model, const Var& x);
Var adjoint_A(Tape& tape, const SensingModel& model, const Var& y);
Var dc_step(Tape& tape, const SensingModel& model, const Var& x, const ComplexTensor& y);
// The solve is differentiated implicitly: since the system matrix is
// Hermitian, grad_z = mu (A^H A + mu I)^{-1} grad_x, itself obtained with the
// same number of CG steps. Nothing is saved for backward.
Var cg_solve(Tape& tape, const SensingModel& model, const ComplexTensor& adjoint_y, const Var& z,
             int iterations);

}  // namespace ad

}  // namespace mriunroll
