// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>

#include "mriunroll/coil_maps.hpp"
#include "mriunroll/mask.hpp"
#include "mriunroll/network.hpp"
#include "mriunroll/sensing.hpp"
#include "mriunroll/train.hpp"

namespace mriunroll::testing {

inline SensingModel small_model(std::size_t n, std::size_t coils, double r, std::uint64_t seed,
                                double mu = 4.0) {
  MaskSpec spec;
  spec.height = spec.width = n;
  spec.acceleration = r;
  spec.calibration = n >= 32 ? 8 : 2;
  spec.seed = seed;
  return SensingModel(make_mask(spec), make_coil_maps(coils, n, n, seed + 1), 0.5, mu);
}

inline NetworkSpec small_spec(NetKind kind, int n, int m, int features = 4,
                              std::uint64_t seed = 7) {
  NetworkSpec s;
  s.kind = kind;
  s.iterations = n;
  s.modules = m;
  s.cnn.kind = kind == NetKind::pgd ? CnnKind::residual : CnnKind::skip5;
  s.cnn.features = features;
  s.cnn.invertible = kind == NetKind::modl;
  s.seed = seed;
  return s;
}

// Overwrites every weight with N(0, stddev^2) so no layer is zero.
inline void randomize(UnrolledNetwork& net, std::mt19937_64& rng, double stddev) {
  for (auto* p : net.parameters()) {
    p->value = ComplexTensor::randn(p->value.shape(), rng, stddev, true);
  }
  net.enforce_contractivity();
}

// Smooth random blobs with a slow phase ramp; y = A x exactly.
inline std::vector<Sample> blob_samples(std::size_t count, std::size_t n, std::size_t coils,
                                        double r, std::uint64_t seed, double mu = 4.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto model = std::make_shared<const SensingModel>(small_model(n, coils, r, seed + 100, mu));
  std::vector<Sample> out;
  for (std::size_t k = 0; k < count; ++k) {
    ComplexTensor x({n, n});
    for (int blob = 0; blob < 3; ++blob) {
      const double cy = unit(rng) * n, cx = unit(rng) * n;
      const double rad = (0.1 + 0.2 * unit(rng)) * n, amp = 0.3 + 0.7 * unit(rng);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double d2 = (i - cy) * (i - cy) + (j - cx) * (j - cx);
          x[i * n + j] += amp * std::exp(-d2 / (2 * rad * rad));
        }
      }
    }
    const double ph = unit(rng);
    for (std::size_t i = 0; i < n * n; ++i) x[i] *= std::polar(1.0, ph * (i % n) / n);
    ComplexTensor y = forward_A(*model, x);
    out.push_back({std::move(x), std::move(y), model});
  }
  return out;
}

inline UnrolledNetwork clone(const UnrolledNetwork& net) {
  return network_from_container(snapshot_container(net));
}

inline double max_param_rel_diff(UnrolledNetwork& a, UnrolledNetwork& b) {
  double worst = 0.0;
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    worst = std::max(worst, relative_error(pa[i]->value, pb[i]->value));
  }
  return worst;
}

inline double max_param_abs_diff(UnrolledNetwork& a, UnrolledNetwork& b) {
  double worst = 0.0;
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    worst = std::max(worst, max_abs_diff(pa[i]->value, pb[i]->value));
  }
  return worst;
}

}  // namespace mriunroll::testing
