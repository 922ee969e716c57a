// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/ops.hpp"

#include <array>
#include <cmath>

#include "mriunroll/conv.hpp"
#include "mriunroll/errors.hpp"
#include "mriunroll/fft.hpp"

namespace mriunroll {

ComplexTensor apply_mask(const ComplexTensor& x, const ComplexTensor& mask) {
  ComplexTensor out = x;
  const std::size_t plane = mask.numel();
  auto d = out.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] *= mask[i % plane].real();
  return out;
}

ComplexTensor coil_expand_values(const ComplexTensor& x, const ComplexTensor& maps) {
  const std::size_t plane = x.numel();
  ComplexTensor out(maps.shape());
  for (std::size_t c = 0; c < maps.dim(0); ++c) {
    for (std::size_t p = 0; p < plane; ++p) out[c * plane + p] = maps[c * plane + p] * x[p];
  }
  return out;
}

ComplexTensor coil_combine_values(const ComplexTensor& y, const ComplexTensor& maps) {
  const std::size_t plane = maps.dim(1) * maps.dim(2);
  ComplexTensor out({maps.dim(1), maps.dim(2)});
  for (std::size_t c = 0; c < maps.dim(0); ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      out[p] += std::conj(maps[c * plane + p]) * y[c * plane + p];
    }
  }
  return out;
}

}  // namespace mriunroll

namespace mriunroll::ad {
namespace {

template <std::size_t N>
std::span<const Var> span_of(const std::array<Var, N>& a) {
  return {a.data(), a.size()};
}

void require_plane(const ComplexTensor& x, const ComplexTensor& mask, const char* op) {
  if (x.rank() < 2 || mask.rank() != 2 || x.dim(x.rank() - 2) != mask.dim(0) ||
      x.dim(x.rank() - 1) != mask.dim(1)) {
    throw DimensionError(std::string(op) + ": operand " + shape_to_string(x.shape()) +
                         " incompatible with " + shape_to_string(mask.shape()));
  }
}

void require_coils(const Shape& image, const ComplexTensor& maps, const char* op) {
  if (maps.rank() != 3 || image.size() != 2 || image[0] != maps.dim(1) ||
      image[1] != maps.dim(2)) {
    throw DimensionError(std::string(op) + ": image " + shape_to_string(image) +
                         " incompatible with coil maps " + shape_to_string(maps.shape()));
  }
}

}  // namespace

Var add(Tape& tape, const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  std::array<Var, 2> in{a, b};
  return tape.record("add", a.value() + b.value(), span_of(in),
                     [](const ComplexTensor& g) { return std::vector<ComplexTensor>{g, g}; }, 0);
}

Var sub(Tape& tape, const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "sub");
  std::array<Var, 2> in{a, b};
  return tape.record("sub", a.value() - b.value(), span_of(in),
                     [](const ComplexTensor& g) {
                       return std::vector<ComplexTensor>{g, cdouble(-1.0) * g};
                     },
                     0);
}

Var scale(Tape& tape, const Var& a, cdouble s) {
  std::array<Var, 1> in{a};
  return tape.record("scale", s * a.value(), span_of(in),
                     [s](const ComplexTensor& g) {
                       return std::vector<ComplexTensor>{std::conj(s) * g};
                     },
                     0);
}

Var cmul(Tape& tape, const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "cmul");
  std::array<Var, 2> in{a, b};
  const bool ga = a.requires_grad();
  const bool gb = b.requires_grad();
  const std::size_t saved = (ga ? b.numel() : 0) + (gb ? a.numel() : 0);
  ComplexTensor keep_a = gb ? a.value() : ComplexTensor();
  ComplexTensor keep_b = ga ? b.value() : ComplexTensor();
  return tape.record("cmul", hadamard(a.value(), b.value()), span_of(in),
                     [keep_a, keep_b, ga, gb](const ComplexTensor& g) {
                       std::vector<ComplexTensor> out(2);
                       if (ga) out[0] = hadamard(g, conj(keep_b));
                       if (gb) out[1] = hadamard(g, conj(keep_a));
                       return out;
                     },
                     saved);
}

Var conv2d(Tape& tape, const Var& x, const Var& w) {
  ComplexTensor out = mriunroll::conv2d(x.value(), w.value());
  std::array<Var, 2> in{x, w};
  const bool gx = x.requires_grad();
  const bool gw = w.requires_grad();
  std::size_t saved = gw ? x.numel() : 0;
  if (gx && !w.is_parameter()) saved += w.numel();
  // Parameter values are weights, not activations.
  ComplexTensor keep_x = gw ? x.value() : ComplexTensor();
  ComplexTensor keep_w = gx ? w.value() : ComplexTensor();
  Shape x_shape = x.shape();
  Shape w_shape = w.shape();
  return tape.record("conv2d", std::move(out), span_of(in),
                     [keep_x, keep_w, x_shape, w_shape, gx, gw](const ComplexTensor& g) {
                       std::vector<ComplexTensor> grads(2);
                       if (gx) grads[0] = conv2d_input_grad(g, keep_w, x_shape);
                       if (gw) grads[1] = conv2d_weight_grad(g, keep_x, w_shape);
                       return grads;
                     },
                     saved);
}

Var relu(Tape& tape, const Var& x) {
  const ComplexTensor& v = x.value();
  ComplexTensor out(v.shape());
  std::vector<bool> positive(v.numel());
  for (std::size_t i = 0; i < v.numel(); ++i) {
    positive[i] = v[i].real() > 0.0;
    out[i] = positive[i] ? v[i].real() : 0.0;
  }
  std::array<Var, 1> in{x};
  return tape.record("relu", std::move(out), span_of(in),
                     [positive = std::move(positive)](const ComplexTensor& g) {
                       ComplexTensor gi(g.shape());
                       for (std::size_t i = 0; i < g.numel(); ++i) {
                         gi[i] = positive[i] ? g[i].real() : 0.0;
                       }
                       return std::vector<ComplexTensor>{std::move(gi)};
                     },
                     v.numel());
}

Var fft2(Tape& tape, const Var& x) {
  std::array<Var, 1> in{x};
  return tape.record("fft2", mriunroll::fft2(x.value()), span_of(in),
                     [](const ComplexTensor& g) {
                       return std::vector<ComplexTensor>{mriunroll::ifft2(g)};
                     },
                     0);
}

Var ifft2(Tape& tape, const Var& x) {
  std::array<Var, 1> in{x};
  return tape.record("ifft2", mriunroll::ifft2(x.value()), span_of(in),
                     [](const ComplexTensor& g) {
                       return std::vector<ComplexTensor>{mriunroll::fft2(g)};
                     },
                     0);
}

Var mask_apply(Tape& tape, const Var& x, std::shared_ptr<const ComplexTensor> mask) {
  require_plane(x.value(), *mask, "mask_apply");
  std::array<Var, 1> in{x};
  auto m = mask;
  return tape.record("mask_apply", mriunroll::apply_mask(x.value(), *mask), span_of(in),
                     [m](const ComplexTensor& g) {
                       return std::vector<ComplexTensor>{mriunroll::apply_mask(g, *m)};
                     },
                     0);
}

Var coil_expand(Tape& tape, const Var& x, std::shared_ptr<const ComplexTensor> maps) {
  require_coils(x.shape(), *maps, "coil_expand");
  std::array<Var, 1> in{x};
  auto s = maps;
  return tape.record("coil_expand", coil_expand_values(x.value(), *maps), span_of(in),
                     [s](const ComplexTensor& g) {
                       return std::vector<ComplexTensor>{coil_combine_values(g, *s)};
                     },
                     0);
}

Var coil_combine(Tape& tape, const Var& y, std::shared_ptr<const ComplexTensor> maps) {
  if (y.shape() != maps->shape()) {
    throw DimensionError("coil_combine: data " + shape_to_string(y.shape()) +
                         " incompatible with coil maps " + shape_to_string(maps->shape()));
  }
  std::array<Var, 1> in{y};
  auto s = maps;
  return tape.record("coil_combine", coil_combine_values(y.value(), *maps), span_of(in),
                     [s](const ComplexTensor& g) {
                       return std::vector<ComplexTensor>{coil_expand_values(g, *s)};
                     },
                     0);
}

Var to_channels(Tape& tape, const Var& x) {
  const ComplexTensor& v = x.value();
  if (v.rank() != 2) throw DimensionError("to_channels expects an (H, W) image");
  const std::size_t plane = v.numel();
  ComplexTensor out({1, 2, v.dim(0), v.dim(1)});
  for (std::size_t p = 0; p < plane; ++p) {
    out[p] = v[p].real();
    out[plane + p] = v[p].imag();
  }
  std::array<Var, 1> in{x};
  Shape shape = v.shape();
  return tape.record("to_channels", std::move(out), span_of(in),
                     [shape, plane](const ComplexTensor& g) {
                       ComplexTensor gi(shape);
                       for (std::size_t p = 0; p < plane; ++p) {
                         gi[p] = {g[p].real(), g[plane + p].real()};
                       }
                       return std::vector<ComplexTensor>{std::move(gi)};
                     },
                     0);
}

Var from_channels(Tape& tape, const Var& x) {
  const ComplexTensor& v = x.value();
  if (v.rank() != 4 || v.dim(0) != 1 || v.dim(1) != 2) {
    throw DimensionError("from_channels expects (1, 2, H, W), got " +
                         shape_to_string(v.shape()));
  }
  const std::size_t plane = v.dim(2) * v.dim(3);
  ComplexTensor out({v.dim(2), v.dim(3)});
  for (std::size_t p = 0; p < plane; ++p) out[p] = {v[p].real(), v[plane + p].real()};
  std::array<Var, 1> in{x};
  Shape shape = v.shape();
  return tape.record("from_channels", std::move(out), span_of(in),
                     [shape, plane](const ComplexTensor& g) {
                       ComplexTensor gi(shape);
                       for (std::size_t p = 0; p < plane; ++p) {
                         gi[p] = g[p].real();
                         gi[plane + p] = g[p].imag();
                       }
                       return std::vector<ComplexTensor>{std::move(gi)};
                     },
                     0);
}

Var sum_real(Tape& tape, const Var& x) {
  double acc = 0.0;
  for (const auto& v : x.value().data()) acc += v.real();
  std::array<Var, 1> in{x};
  Shape shape = x.shape();
  return tape.record("sum_real", ComplexTensor::scalar(acc), span_of(in),
                     [shape](const ComplexTensor& g) {
                       return std::vector<ComplexTensor>{
                           ComplexTensor::full(shape, g.item().real())};
                     },
                     0);
}

Var squared_norm(Tape& tape, const Var& x) {
  double acc = 0.0;
  for (const auto& v : x.value().data()) acc += std::norm(v);
  std::array<Var, 1> in{x};
  ComplexTensor keep = x.value();
  return tape.record("squared_norm", ComplexTensor::scalar(acc), span_of(in),
                     [keep](const ComplexTensor& g) {
                       return std::vector<ComplexTensor>{(2.0 * g.item().real()) * keep};
                     },
                     x.numel());
}

Var l1_complex(Tape& tape, const Var& pred, const Var& target) {
  require_same_shape(pred.value(), target.value(), "l1_complex");
  const std::size_t n = pred.numel();
  ComplexTensor phase(pred.shape());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const cdouble r = pred.value()[i] - target.value()[i];
    const double mag = std::abs(r);
    acc += mag;
    phase[i] = mag > 0.0 ? r / mag : cdouble{0.0, 0.0};
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  std::array<Var, 2> in{pred, target};
  const bool gt = target.requires_grad();
  const bool gp = pred.requires_grad();
  return tape.record("l1_complex", ComplexTensor::scalar(acc * inv_n), span_of(in),
                     [phase = std::move(phase), inv_n, gp, gt](const ComplexTensor& g) {
                       const double s = g.item().real() * inv_n;
                       std::vector<ComplexTensor> out(2);
                       if (gp) out[0] = cdouble(s) * phase;
                       if (gt) out[1] = cdouble(-s) * phase;
                       return out;
                     },
                     n);
}

}  // namespace mriunroll::ad
