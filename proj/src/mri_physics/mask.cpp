// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/mask.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "mriunroll/errors.hpp"

namespace mriunroll {
namespace {

// Frequency index range centred on DC in unshifted layout.
std::vector<std::size_t> centre_indices(std::size_t n, std::size_t count) {
  std::vector<std::size_t> out;
  const auto half = static_cast<std::ptrdiff_t>(count / 2);
  for (std::ptrdiff_t k = -half; k < static_cast<std::ptrdiff_t>(count) - half; ++k) {
    const auto sn = static_cast<std::ptrdiff_t>(n);
    out.push_back(static_cast<std::size_t>(((k % sn) + sn) % sn));
  }
  return out;
}

// Bridson's algorithm on the torus [0,h) x [0,w); returns grid-snapped cells
// merged into `cells` (h*w booleans).
std::size_t poisson_disc_fill(std::vector<char>& cells, std::size_t h, std::size_t w,
                              double radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double cell = radius / std::sqrt(2.0);
  const auto gh = static_cast<std::size_t>(std::ceil(static_cast<double>(h) / cell));
  const auto gw = static_cast<std::size_t>(std::ceil(static_cast<double>(w) / cell));
  std::vector<int> grid(gh * gw, -1);
  std::vector<std::array<double, 2>> points;
  std::vector<std::size_t> active;

  auto wrap = [](double v, double n) { return v - n * std::floor(v / n); };
  auto torus_dist2 = [&](const std::array<double, 2>& a, const std::array<double, 2>& b) {
    double dy = std::abs(a[0] - b[0]);
    double dx = std::abs(a[1] - b[1]);
    dy = std::min(dy, static_cast<double>(h) - dy);
    dx = std::min(dx, static_cast<double>(w) - dx);
    return dy * dy + dx * dx;
  };
  const auto sgh = static_cast<std::ptrdiff_t>(gh);
  const auto sgw = static_cast<std::ptrdiff_t>(gw);
  auto fits = [&](const std::array<double, 2>& p) {
    const auto gy = static_cast<std::ptrdiff_t>(p[0] / cell);
    const auto gx = static_cast<std::ptrdiff_t>(p[1] / cell);
    for (std::ptrdiff_t oy = -2; oy <= 2; ++oy) {
      const std::ptrdiff_t yy = ((gy + oy) % sgh + sgh) % sgh;
      for (std::ptrdiff_t ox = -2; ox <= 2; ++ox) {
        const std::ptrdiff_t xx = ((gx + ox) % sgw + sgw) % sgw;
        const int idx = grid[static_cast<std::size_t>(yy * sgw + xx)];
        if (idx >= 0 && torus_dist2(points[static_cast<std::size_t>(idx)], p) < radius * radius) {
          return false;
        }
      }
    }
    return true;
  };
  auto insert = [&](const std::array<double, 2>& p) {
    const auto gy = std::min(static_cast<std::size_t>(p[0] / cell), gh - 1);
    const auto gx = std::min(static_cast<std::size_t>(p[1] / cell), gw - 1);
    points.push_back(p);
    grid[gy * gw + gx] = static_cast<int>(points.size() - 1);
    active.push_back(points.size() - 1);
  };

  insert({unit(rng) * static_cast<double>(h), unit(rng) * static_cast<double>(w)});
  constexpr int kCandidates = 30;
  while (!active.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
    const std::size_t slot = pick(rng);
    const auto base = points[active[slot]];
    bool placed = false;
    for (int k = 0; k < kCandidates; ++k) {
      const double rr = radius * (1.0 + unit(rng));
      const double theta = 2.0 * std::numbers::pi * unit(rng);
      std::array<double, 2> cand{wrap(base[0] + rr * std::sin(theta), static_cast<double>(h)),
                                 wrap(base[1] + rr * std::cos(theta), static_cast<double>(w))};
      if (fits(cand)) {
        insert(cand);
        placed = true;
        break;
      }
    }
    if (!placed) {
      active[slot] = active.back();
      active.pop_back();
    }
  }
  for (const auto& p : points) {
    const auto y = std::min(static_cast<std::size_t>(p[0]), h - 1);
    const auto x = std::min(static_cast<std::size_t>(p[1]), w - 1);
    cells[y * w + x] = 1;
  }
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), 1));
}

ComplexTensor to_tensor(const std::vector<char>& cells, std::size_t h, std::size_t w) {
  ComplexTensor mask({h, w});
  for (std::size_t i = 0; i < cells.size(); ++i) mask[i] = cells[i] ? 1.0 : 0.0;
  return mask;
}

ComplexTensor poisson_disc(const MaskSpec& spec) {
  const std::size_t h = spec.height;
  const std::size_t w = spec.width;
  const std::size_t total = h * w;
  const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(total) /
                                                            spec.acceleration));
  const std::size_t cal_rows = std::min(spec.calibration, h);
  const std::size_t cal_cols = std::min(spec.calibration, w);
  std::vector<char> calib(total, 0);
  for (auto r : centre_indices(h, cal_rows)) {
    for (auto c : centre_indices(w, cal_cols)) calib[r * w + c] = 1;
  }
  const std::size_t cal_count = cal_rows * cal_cols;
  if (target < cal_count + 1) {
    throw ConfigError("acceleration " + std::to_string(spec.acceleration) +
                      " too large for a " + std::to_string(h) + "x" + std::to_string(w) +
                      " grid with calibration " + std::to_string(spec.calibration));
  }

  // Bridson packings hold roughly 0.6 points per radius^2.
  const double guess = std::sqrt(0.6 * static_cast<double>(total) / static_cast<double>(target));
  double lo = std::max(0.5, 0.5 * guess);
  double hi = 2.0 * guess;
  std::vector<char> best;
  double best_err = std::numeric_limits<double>::infinity();
  const double tolerance = std::max(1.0, 0.01 * static_cast<double>(target));
  for (int iter = 0; iter < 40; ++iter) {
    const double radius = 0.5 * (lo + hi);
    std::vector<char> cells = calib;
    const std::size_t count = poisson_disc_fill(cells, h, w, radius, spec.seed);
    const double err = std::abs(static_cast<double>(count) - static_cast<double>(target));
    if (err < best_err) {
      best_err = err;
      best = cells;
    }
    if (err <= tolerance) break;
    if (count > target) {
      lo = radius;
    } else {
      hi = radius;
    }
    // The count is not monotone in the radius at fine scales.
    if (hi - lo < 1e-3 * radius) break;
  }
  ComplexTensor mask = to_tensor(best, h, w);
  const double achieved = mask_acceleration(mask);
  if (std::abs(achieved - spec.acceleration) > 0.1 * spec.acceleration) {
    throw ConfigError("poisson disc sampling could not reach acceleration " +
                      std::to_string(spec.acceleration) + " (got " + std::to_string(achieved) +
                      ")");
  }
  return mask;
}

ComplexTensor random_columns(const MaskSpec& spec) {
  const std::size_t h = spec.height;
  const std::size_t w = spec.width;
  const auto target =
      static_cast<std::size_t>(std::llround(static_cast<double>(w) / spec.acceleration));
  const std::size_t cal = std::min(spec.calibration, w);
  if (target < cal + 1) {
    throw ConfigError("acceleration " + std::to_string(spec.acceleration) +
                      " too large for " + std::to_string(w) + " columns with calibration " +
                      std::to_string(spec.calibration));
  }
  std::vector<char> column(w, 0);
  for (auto c : centre_indices(w, cal)) column[c] = 1;
  std::vector<std::size_t> candidates;
  for (std::size_t c = 0; c < w; ++c) {
    if (!column[c]) candidates.push_back(c);
  }
  std::mt19937_64 rng(spec.seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  for (std::size_t i = 0; i < target - cal; ++i) column[candidates[i]] = 1;
  ComplexTensor mask({h, w});
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) mask[r * w + c] = column[c] ? 1.0 : 0.0;
  }
  return mask;
}

}  // namespace

std::string to_string(MaskKind kind) {
  return kind == MaskKind::poisson_disc_2d ? "poisson_disc_2d" : "random_1d_cartesian";
}

MaskKind mask_kind_from_string(const std::string& name) {
  if (name == "poisson_disc_2d") return MaskKind::poisson_disc_2d;
  if (name == "random_1d_cartesian") return MaskKind::random_1d_cartesian;
  throw ConfigError("unknown mask kind '" + name + "'");
}

double mask_acceleration(const ComplexTensor& mask) {
  double sampled = 0.0;
  for (const auto& v : mask.data()) sampled += v.real();
  if (sampled == 0.0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(mask.numel()) / sampled;
}

ComplexTensor make_mask(const MaskSpec& spec) {
  if (spec.height == 0 || spec.width == 0) throw ConfigError("mask extents must be positive");
  if (!(spec.acceleration >= 1.0)) throw ConfigError("acceleration must be >= 1");
  if (spec.acceleration == 1.0) return ComplexTensor::ones({spec.height, spec.width});
  return spec.kind == MaskKind::poisson_disc_2d ? poisson_disc(spec) : random_columns(spec);
}

}  // namespace mriunroll
