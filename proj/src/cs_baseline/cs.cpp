// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/cs.hpp"

#include <cmath>

#include "mriunroll/errors.hpp"

namespace mriunroll {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

void check_levels(const ComplexTensor& x, int levels) {
  if (x.rank() != 2) throw DimensionError("wavelet2 expects an (H, W) image");
  if (levels < 1) throw ConfigError("wavelet levels must be >= 1");
  const std::size_t block = std::size_t{1} << levels;
  if (x.dim(0) % block != 0 || x.dim(1) % block != 0) {
    throw UnsupportedSizeError("extent " + shape_to_string(x.shape()) +
                               " not divisible by 2^" + std::to_string(levels));
  }
}

// One analysis (forward) or synthesis step along rows or columns of the
// top-left h x w region.
void haar_pass(ComplexTensor& x, std::size_t h, std::size_t w, bool along_rows, bool forward) {
  const std::size_t stride = x.dim(1);
  const std::size_t lines = along_rows ? h : w;
  const std::size_t len = along_rows ? w : h;
  std::vector<cdouble> buf(len);
  for (std::size_t l = 0; l < lines; ++l) {
    auto at = [&](std::size_t k) -> cdouble& {
      return along_rows ? x[l * stride + k] : x[k * stride + l];
    };
    const std::size_t half = len / 2;
    if (forward) {
      for (std::size_t k = 0; k < half; ++k) {
        buf[k] = (at(2 * k) + at(2 * k + 1)) * kInvSqrt2;
        buf[half + k] = (at(2 * k) - at(2 * k + 1)) * kInvSqrt2;
      }
    } else {
      for (std::size_t k = 0; k < half; ++k) {
        buf[2 * k] = (at(k) + at(half + k)) * kInvSqrt2;
        buf[2 * k + 1] = (at(k) - at(half + k)) * kInvSqrt2;
      }
    }
    for (std::size_t k = 0; k < len; ++k) at(k) = buf[k];
  }
}

}  // namespace

ComplexTensor wavelet2(const ComplexTensor& x, int levels) {
  check_levels(x, levels);
  ComplexTensor c = x;
  std::size_t h = x.dim(0), w = x.dim(1);
  for (int l = 0; l < levels; ++l) {
    haar_pass(c, h, w, true, true);
    haar_pass(c, h, w, false, true);
    h /= 2;
    w /= 2;
  }
  return c;
}

ComplexTensor iwavelet2(const ComplexTensor& c, int levels) {
  check_levels(c, levels);
  ComplexTensor x = c;
  for (int l = levels - 1; l >= 0; --l) {
    const std::size_t h = c.dim(0) >> l, w = c.dim(1) >> l;
    haar_pass(x, h, w, false, false);
    haar_pass(x, h, w, true, false);
  }
  return x;
}

ComplexTensor soft_threshold(const ComplexTensor& c, double tau) {
  if (tau < 0.0) throw ConfigError("soft threshold must be >= 0");
  ComplexTensor out(c.shape());
  for (std::size_t i = 0; i < c.numel(); ++i) {
    const double mag = std::abs(c[i]);
    out[i] = mag > tau ? c[i] * (1.0 - tau / mag) : cdouble{};
  }
  return out;
}

void CsConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("cs lambda must be >= 0");
  if (iterations < 1) throw ConfigError("cs iterations must be >= 1");
  if (levels < 1) throw ConfigError("cs wavelet levels must be >= 1");
  if (!(step > 0.0)) throw ConfigError("cs step must be > 0");
}

double cs_objective(const SensingModel& model, const ComplexTensor& y, const ComplexTensor& x,
                    const CsConfig& cfg) {
  const double r = norm2(forward_A(model, x) - y);
  double l1 = 0.0;
  const ComplexTensor c = wavelet2(x, cfg.levels);
  for (const auto& v : c.data()) l1 += std::abs(v);
  return 0.5 * r * r + cfg.lambda * l1;
}

CsResult cs_reconstruct(const SensingModel& model, const ComplexTensor& y, const CsConfig& cfg) {
  cfg.validate();
  CsResult res;
  res.image = ComplexTensor::zeros(model.image_shape());
  res.objective.push_back(cs_objective(model, y, res.image, cfg));
  for (int k = 0; k < cfg.iterations; ++k) {
    const ComplexTensor grad = adjoint_A(model, forward_A(model, res.image) - y);
    const ComplexTensor z = res.image - cdouble(cfg.step) * grad;
    res.image = iwavelet2(soft_threshold(wavelet2(z, cfg.levels), cfg.step * cfg.lambda),
                          cfg.levels);
    res.objective.push_back(cs_objective(model, y, res.image, cfg));
  }
  return res;
}

}  // namespace mriunroll
