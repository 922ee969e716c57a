// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/conv.hpp"

#include <algorithm>
#include <vector>

#include "mriunroll/errors.hpp"

namespace mriunroll {
namespace {

std::vector<double> real_buffer(const ComplexTensor& t) {
  std::vector<double> out(t.numel());
  const auto d = t.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = d[i].real();
  return out;
}

ComplexTensor from_real(Shape shape, const std::vector<double>& values) {
  ComplexTensor t(std::move(shape));
  auto d = t.data();
  for (std::size_t i = 0; i < values.size(); ++i) d[i] = values[i];
  return t;
}

struct Geometry {
  std::size_t batch, cin, cout, h, w, k;
  std::ptrdiff_t pad;
};

Geometry geometry(const Shape& x, const Shape& w) {
  if (x.size() != 4 || w.size() != 4) {
    throw DimensionError("conv2d expects x (B,C,H,W) and w (Cout,Cin,K,K), got " +
                         shape_to_string(x) + " and " + shape_to_string(w));
  }
  if (x[1] != w[1]) {
    throw DimensionError("conv2d channel mismatch: input " + shape_to_string(x) + ", kernel " +
                         shape_to_string(w));
  }
  if (w[2] != w[3] || w[2] % 2 == 0) {
    throw DimensionError("conv2d kernel must be square with odd extent, got " +
                         shape_to_string(w));
  }
  return {x[0], x[1], w[0], x[2], x[3], w[2], static_cast<std::ptrdiff_t>(w[2] / 2)};
}

// Valid output index range [lo, hi) for which out + offset lands in [0, n).
inline void valid_range(std::ptrdiff_t offset, std::size_t n, std::size_t& lo, std::size_t& hi) {
  const auto sn = static_cast<std::ptrdiff_t>(n);
  lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -offset));
  hi = static_cast<std::size_t>(std::min<std::ptrdiff_t>(sn, sn - offset));
  if (hi < lo) hi = lo;
}

}  // namespace

Shape conv2d_output_shape(const Shape& x, const Shape& w) {
  const Geometry g = geometry(x, w);
  return {g.batch, g.cout, g.h, g.w};
}

ComplexTensor conv2d(const ComplexTensor& x, const ComplexTensor& w) {
  const Geometry g = geometry(x.shape(), w.shape());
  const auto xr = real_buffer(x);
  const auto wr = real_buffer(w);
  std::vector<double> out(g.batch * g.cout * g.h * g.w, 0.0);
  const std::size_t plane = g.h * g.w;
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t co = 0; co < g.cout; ++co) {
      double* o = out.data() + (b * g.cout + co) * plane;
      for (std::size_t ci = 0; ci < g.cin; ++ci) {
        const double* in = xr.data() + (b * g.cin + ci) * plane;
        const double* kern = wr.data() + (co * g.cin + ci) * g.k * g.k;
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - g.pad;
          std::size_t r0, r1;
          valid_range(dy, g.h, r0, r1);
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            const double wv = kern[ky * g.k + kx];
            if (wv == 0.0) continue;
            const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - g.pad;
            std::size_t c0, c1;
            valid_range(dx, g.w, c0, c1);
            for (std::size_t r = r0; r < r1; ++r) {
              double* orow = o + r * g.w;
              const double* irow = in + (r + dy) * g.w + dx;
              for (std::size_t c = c0; c < c1; ++c) orow[c] += wv * irow[c];
            }
          }
        }
      }
    }
  }
  return from_real({g.batch, g.cout, g.h, g.w}, out);
}

ComplexTensor conv2d_input_grad(const ComplexTensor& grad_out, const ComplexTensor& w,
                                const Shape& input_shape) {
  const Geometry g = geometry(input_shape, w.shape());
  if (grad_out.shape() != Shape{g.batch, g.cout, g.h, g.w}) {
    throw DimensionError("conv2d_input_grad: gradient shape " +
                         shape_to_string(grad_out.shape()));
  }
  const auto gr = real_buffer(grad_out);
  const auto wr = real_buffer(w);
  std::vector<double> out(g.batch * g.cin * g.h * g.w, 0.0);
  const std::size_t plane = g.h * g.w;
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t co = 0; co < g.cout; ++co) {
      const double* go = gr.data() + (b * g.cout + co) * plane;
      for (std::size_t ci = 0; ci < g.cin; ++ci) {
        double* gi = out.data() + (b * g.cin + ci) * plane;
        const double* kern = wr.data() + (co * g.cin + ci) * g.k * g.k;
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - g.pad;
          std::size_t r0, r1;
          valid_range(dy, g.h, r0, r1);
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            const double wv = kern[ky * g.k + kx];
            if (wv == 0.0) continue;
            const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - g.pad;
            std::size_t c0, c1;
            valid_range(dx, g.w, c0, c1);
            for (std::size_t r = r0; r < r1; ++r) {
              const double* grow = go + r * g.w;
              double* irow = gi + (r + dy) * g.w + dx;
              for (std::size_t c = c0; c < c1; ++c) irow[c] += wv * grow[c];
            }
          }
        }
      }
    }
  }
  return from_real(input_shape, out);
}

ComplexTensor conv2d_weight_grad(const ComplexTensor& grad_out, const ComplexTensor& x,
                                 const Shape& weight_shape) {
  const Geometry g = geometry(x.shape(), weight_shape);
  const auto gr = real_buffer(grad_out);
  const auto xr = real_buffer(x);
  std::vector<double> out(shape_numel(weight_shape), 0.0);
  const std::size_t plane = g.h * g.w;
  for (std::size_t co = 0; co < g.cout; ++co) {
    for (std::size_t ci = 0; ci < g.cin; ++ci) {
      double* gk = out.data() + (co * g.cin + ci) * g.k * g.k;
      for (std::size_t ky = 0; ky < g.k; ++ky) {
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - g.pad;
        std::size_t r0, r1;
        valid_range(dy, g.h, r0, r1);
        for (std::size_t kx = 0; kx < g.k; ++kx) {
          const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - g.pad;
          std::size_t c0, c1;
          valid_range(dx, g.w, c0, c1);
          double acc = 0.0;
          for (std::size_t b = 0; b < g.batch; ++b) {
            const double* go = gr.data() + (b * g.cout + co) * plane;
            const double* in = xr.data() + (b * g.cin + ci) * plane;
            for (std::size_t r = r0; r < r1; ++r) {
              const double* grow = go + r * g.w;
              const double* irow = in + (r + dy) * g.w + dx;
              for (std::size_t c = c0; c < c1; ++c) acc += grow[c] * irow[c];
            }
          }
          gk[ky * g.k + kx] = acc;
        }
      }
    }
  }
  return from_real(weight_shape, out);
}

}  // namespace mriunroll
