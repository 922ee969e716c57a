// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/fft.hpp"

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "mriunroll/errors.hpp"

namespace mriunroll {
namespace {

// In-place iterative radix-2 transform of `n` values spaced `stride` apart.
// `twiddle` holds exp(sign * 2*pi*i*k/n) for k < n/2.
void fft_strided(cdouble* base, std::size_t n, std::size_t stride,
                 const std::vector<cdouble>& twiddle, std::vector<cdouble>& scratch) {
  scratch.resize(n);
  for (std::size_t i = 0; i < n; ++i) scratch[i] = base[i * stride];

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(scratch[i], scratch[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const cdouble u = scratch[start + k];
        const cdouble v = scratch[start + k + half] * twiddle[k * step];
        scratch[start + k] = u + v;
        scratch[start + k + half] = u - v;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) base[i * stride] = scratch[i];
}

std::vector<cdouble> make_twiddles(std::size_t n, double sign) {
  std::vector<cdouble> tw(n / 2 + 1);
  for (std::size_t k = 0; k < tw.size(); ++k) {
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(n);
    tw[k] = {std::cos(angle), std::sin(angle)};
  }
  return tw;
}

ComplexTensor transform(const ComplexTensor& x, double sign) {
  if (x.rank() < 2) throw DimensionError("fft2 needs at least two axes");
  const std::size_t h = x.dim(x.rank() - 2);
  const std::size_t w = x.dim(x.rank() - 1);
  if (!is_power_of_two(h) || !is_power_of_two(w)) {
    throw UnsupportedSizeError("fft2 extents must be powers of two, got " +
                               shape_to_string(x.shape()));
  }
  const auto tw_w = make_twiddles(w, sign);
  const auto tw_h = make_twiddles(h, sign);
  const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));
  ComplexTensor out = x;
  std::vector<cdouble> scratch;
  const std::size_t plane = h * w;
  const std::size_t batches = x.numel() / plane;
  for (std::size_t b = 0; b < batches; ++b) {
    cdouble* p = out.data().data() + b * plane;
    for (std::size_t r = 0; r < h; ++r) fft_strided(p + r * w, w, 1, tw_w, scratch);
    for (std::size_t c = 0; c < w; ++c) fft_strided(p + c, h, w, tw_h, scratch);
    for (std::size_t i = 0; i < plane; ++i) p[i] *= scale;
  }
  return out;
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

ComplexTensor fft2(const ComplexTensor& x) { return transform(x, -1.0); }
ComplexTensor ifft2(const ComplexTensor& x) { return transform(x, +1.0); }

}  // namespace mriunroll
