// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/sensing.hpp"

#include <array>
#include <cmath>

#include "mriunroll/errors.hpp"
#include "mriunroll/fft.hpp"
#include "mriunroll/ops.hpp"

namespace mriunroll {

SensingModel::SensingModel(ComplexTensor mask, ComplexTensor coil_maps, double step_size,
                           double mu)
    : step_size_(step_size), mu_(mu) {
  if (coil_maps.rank() != 3 || coil_maps.dim(0) == 0) {
    throw DimensionError("coil maps must be (C, H, W), got " +
                         shape_to_string(coil_maps.shape()));
  }
  if (mask.shape() != Shape{coil_maps.dim(1), coil_maps.dim(2)}) {
    throw DimensionError("mask " + shape_to_string(mask.shape()) +
                         " does not match coil maps " + shape_to_string(coil_maps.shape()));
  }
  for (const auto& v : mask.data()) {
    if (v.imag() != 0.0 || (v.real() != 0.0 && v.real() != 1.0)) {
      throw ConfigError("mask entries must be 0 or 1");
    }
  }
  if (!(step_size > 0.0)) throw ConfigError("step size must be positive");
  mask_ = std::make_shared<const ComplexTensor>(std::move(mask));
  maps_ = std::make_shared<const ComplexTensor>(std::move(coil_maps));
}

SensingModel SensingModel::with_mu(double mu) const {
  SensingModel copy = *this;
  copy.mu_ = mu;
  return copy;
}

SensingModel SensingModel::with_step_size(double t) const {
  if (!(t > 0.0)) throw ConfigError("step size must be positive");
  SensingModel copy = *this;
  copy.step_size_ = t;
  return copy;
}

double SensingModel::achieved_acceleration() const {
  double sampled = 0.0;
  for (const auto& v : mask_->data()) sampled += v.real();
  return static_cast<double>(mask_->numel()) / std::max(sampled, 1.0);
}

namespace {

void require_image(const SensingModel& model, const ComplexTensor& x, const char* op) {
  if (x.shape() != model.image_shape()) {
    throw DimensionError(std::string(op) + ": image " + shape_to_string(x.shape()) +
                         " does not match model " + shape_to_string(model.image_shape()));
  }
}

void require_kspace(const SensingModel& model, const ComplexTensor& y, const char* op) {
  if (y.shape() != model.kspace_shape()) {
    throw DimensionError(std::string(op) + ": k-space " + shape_to_string(y.shape()) +
                         " does not match model " + shape_to_string(model.kspace_shape()));
  }
}

// (A^H A + mu I) x
ComplexTensor system_apply(const SensingModel& model, const ComplexTensor& x) {
  ComplexTensor out = normal_A(model, x);
  const auto xd = x.data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += model.mu() * xd[i];
  return out;
}

double real_inner(const ComplexTensor& a, const ComplexTensor& b) { return inner(a, b).real(); }

// Plain CG on the Hermitian positive definite system, starting from zero.
CgResult conjugate_gradient(const SensingModel& model, const ComplexTensor& b, int iterations) {
  CgResult result;
  result.x = ComplexTensor::zeros(b.shape());
  ComplexTensor r = b;
  ComplexTensor p = b;
  double rr = real_inner(r, r);
  const double b_norm = std::sqrt(rr);
  result.relative_residuals.reserve(static_cast<std::size_t>(iterations));
  for (int k = 0; k < iterations; ++k) {
    if (rr == 0.0) {
      result.relative_residuals.push_back(0.0);
      continue;
    }
    const ComplexTensor q = system_apply(model, p);
    const double alpha = rr / real_inner(p, q);
    auto xd = result.x.data();
    auto rd = r.data();
    const auto pd = p.data();
    const auto qd = q.data();
    for (std::size_t i = 0; i < xd.size(); ++i) {
      xd[i] += alpha * pd[i];
      rd[i] -= alpha * qd[i];
    }
    const double rr_next = real_inner(r, r);
    const double beta = rr_next / rr;
    rr = rr_next;
    auto pm = p.data();
    for (std::size_t i = 0; i < pm.size(); ++i) pm[i] = rd[i] + beta * pm[i];
    result.relative_residuals.push_back(b_norm > 0.0 ? std::sqrt(rr) / b_norm : 0.0);
  }
  return result;
}

void check_cg_args(const SensingModel& model, int iterations) {
  if (!(model.mu() > 0.0)) {
    throw ConfigError("cg_solve requires mu > 0 (the normal operator alone may be singular)");
  }
  if (iterations < 1) throw ConfigError("cg_solve requires at least one iteration");
}

}  // namespace

ComplexTensor forward_A(const SensingModel& model, const ComplexTensor& x) {
  require_image(model, x, "forward_A");
  return apply_mask(fft2(coil_expand_values(x, model.coil_maps())), model.mask());
}

ComplexTensor adjoint_A(const SensingModel& model, const ComplexTensor& y) {
  require_kspace(model, y, "adjoint_A");
  return coil_combine_values(ifft2(apply_mask(y, model.mask())), model.coil_maps());
}

ComplexTensor normal_A(const SensingModel& model, const ComplexTensor& x) {
  return adjoint_A(model, forward_A(model, x));
}

ComplexTensor dc_step(const SensingModel& model, const ComplexTensor& x, const ComplexTensor& y) {
  ComplexTensor residual = forward_A(model, x) - y;
  return x - cdouble(2.0 * model.step_size()) * adjoint_A(model, residual);
}

CgResult cg_solve(const SensingModel& model, const ComplexTensor& adjoint_y,
                  const ComplexTensor& z, int iterations) {
  check_cg_args(model, iterations);
  require_image(model, adjoint_y, "cg_solve");
  require_image(model, z, "cg_solve");
  ComplexTensor b = adjoint_y + cdouble(model.mu()) * z;
  return conjugate_gradient(model, b, iterations);
}

ComplexTensor cg_inverse(const SensingModel& model, const ComplexTensor& x_next,
                         const ComplexTensor& adjoint_y) {
  require_image(model, x_next, "cg_inverse");
  require_image(model, adjoint_y, "cg_inverse");
  if (!(model.mu() > 0.0)) throw ConfigError("cg_inverse requires mu > 0");
  return cdouble(1.0 / model.mu()) * (system_apply(model, x_next) - adjoint_y);
}

namespace ad {

Var forward_A(Tape& tape, const SensingModel& model, const Var& x) {
  require_image(model, x.value(), "forward_A");
  Var coils = coil_expand(tape, x, model.shared_coil_maps());
  return mask_apply(tape, fft2(tape, coils), model.shared_mask());
}

Var adjoint_A(Tape& tape, const SensingModel& model, const Var& y) {
  require_kspace(model, y.value(), "adjoint_A");
  Var img = ifft2(tape, mask_apply(tape, y, model.shared_mask()));
  return coil_combine(tape, img, model.shared_coil_maps());
}

Var dc_step(Tape& tape, const SensingModel& model, const Var& x, const ComplexTensor& y) {
  Var residual = sub(tape, forward_A(tape, model, x), Var::constant(y));
  Var correction = scale(tape, adjoint_A(tape, model, residual), 2.0 * model.step_size());
  return sub(tape, x, correction);
}

Var cg_solve(Tape& tape, const SensingModel& model, const ComplexTensor& adjoint_y, const Var& z,
             int iterations) {
  ComplexTensor x = mriunroll::cg_solve(model, adjoint_y, z.value(), iterations).x;
  std::array<Var, 1> in{z};
  SensingModel m = model;
  return tape.record("cg_solve", std::move(x), in,
                     [m, iterations](const ComplexTensor& g) {
                       ComplexTensor w = conjugate_gradient(m, g, iterations).x;
                       w *= m.mu();
                       return std::vector<ComplexTensor>{std::move(w)};
                     },
                     0);
}

}  // namespace ad
}  // namespace mriunroll
