// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/coil_maps.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "mriunroll/errors.hpp"

namespace mriunroll {

ComplexTensor make_coil_maps(std::size_t coils, std::size_t height, std::size_t width,
                             std::uint64_t seed) {
  if (coils < 1) throw ConfigError("at least one coil is required");
  if (height == 0 || width == 0) throw ConfigError("coil map extents must be positive");
  if (coils == 1) return ComplexTensor::ones({1, height, width});

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double angle0 = 2.0 * std::numbers::pi * unit(rng);
  ComplexTensor maps({coils, height, width});
  const std::size_t plane = height * width;
  for (std::size_t c = 0; c < coils; ++c) {
    const double angle =
        angle0 + 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(coils);
    // Coil centres sit just outside the central disc, in normalized [-1, 1]
    // coordinates.
    const double ring = 0.9 + 0.2 * unit(rng);
    const double cy = ring * std::sin(angle);
    const double cx = ring * std::cos(angle);
    const double width_sq = std::pow(0.7 + 0.3 * unit(rng), 2);
    const double phase0 = 2.0 * std::numbers::pi * unit(rng);
    const double py = (unit(rng) - 0.5) * std::numbers::pi;
    const double px = (unit(rng) - 0.5) * std::numbers::pi;
    for (std::size_t r = 0; r < height; ++r) {
      const double y = 2.0 * (static_cast<double>(r) + 0.5) / static_cast<double>(height) - 1.0;
      for (std::size_t k = 0; k < width; ++k) {
        const double x = 2.0 * (static_cast<double>(k) + 0.5) / static_cast<double>(width) - 1.0;
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        const double mag = std::exp(-d2 / (2.0 * width_sq));
        maps[c * plane + r * width + k] = std::polar(mag, phase0 + py * y + px * x);
      }
    }
  }
  for (std::size_t p = 0; p < plane; ++p) {
    double energy = 0.0;
    for (std::size_t c = 0; c < coils; ++c) energy += std::norm(maps[c * plane + p]);
    const double inv = 1.0 / std::sqrt(energy);
    for (std::size_t c = 0; c < coils; ++c) maps[c * plane + p] *= inv;
  }
  return maps;
}

}  // namespace mriunroll
