// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "mriunroll/autodiff.hpp"
#include "mriunroll/checkpoint.hpp"
#include "mriunroll/conv.hpp"
#include "mriunroll/errors.hpp"
#include "mriunroll/fft.hpp"
#include "mriunroll/ops.hpp"
#include "support/oracles.hpp"

using namespace mriunroll;
using mriunroll::testing::finite_difference_gradient;
using mriunroll::testing::rel_err;

namespace {

using UnaryOp = std::function<Var(Tape&, const Var&)>;

// Scalarizes an op output with a fixed random probe: L = Re sum conj(c) op(x).
double probe_loss(const UnaryOp& op, const ComplexTensor& x, const ComplexTensor& probe) {
  Tape tape(std::make_shared<ActivationMeter>(), false);
  const ComplexTensor out = op(tape, Var::constant(x)).value();
  return inner(probe, out).real();
}

struct GradPair {
  ComplexTensor autodiff;
  ComplexTensor numeric;
};

GradPair check_unary(const UnaryOp& op, const ComplexTensor& x, std::mt19937_64& rng,
                     bool real_only = false) {
  Tape probe_tape(std::make_shared<ActivationMeter>(), false);
  const Shape out_shape = op(probe_tape, Var::constant(x)).shape();
  const ComplexTensor probe = ComplexTensor::randn(out_shape, rng, 1.0, real_only);

  Tape tape;
  Var leaf = tape.leaf(x);
  Var out = op(tape, leaf);
  Var loss = ad::sum_real(tape, ad::cmul(tape, out, Var::constant(conj(probe))));
  tape.backward(loss);
  ComplexTensor g = tape.grad(leaf);
  ComplexTensor fd = finite_difference_gradient(
      [&](const ComplexTensor& v) { return probe_loss(op, v, probe); }, x, 1e-6, real_only);
  return {g, fd};
}

// Keeps relu inputs away from the kink so central differences are valid.
ComplexTensor away_from_zero(ComplexTensor t) {
  for (auto& v : t.data()) {
    if (std::abs(v.real()) < 0.05) v = {v.real() < 0 ? -0.1 : 0.1, v.imag()};
  }
  return t;
}

}  // namespace

TEST_CASE("record: trivial values and shape rules") {
  Tape tape;
  Var a = tape.leaf(ComplexTensor::zeros({2, 2}));
  Var b = tape.leaf(ComplexTensor::zeros({2, 2}));
  CHECK(ad::add(tape, a, b).value().identical(ComplexTensor::zeros({2, 2})));

  Var ones = tape.leaf(ComplexTensor::ones({3}));
  CHECK(ad::scale(tape, ones, 2.0).value().identical(ComplexTensor::full({3}, 2.0)));

  CHECK(conv2d_output_shape({1, 4, 8, 8}, {4, 4, 3, 3}) == Shape{1, 4, 8, 8});
  std::mt19937_64 rng(3);
  Var x = tape.leaf(ComplexTensor::randn({1, 4, 8, 8}, rng, 1.0, true));
  Var k = tape.leaf(ComplexTensor::randn({4, 4, 3, 3}, rng, 1.0, true));
  CHECK(ad::conv2d(tape, x, k).shape() == Shape{1, 4, 8, 8});

  CHECK_THROWS_AS(ad::add(tape, a, ones), DimensionError);
  CHECK_THROWS_AS(ad::conv2d(tape, x, tape.leaf(ComplexTensor::zeros({4, 3, 3, 3}))),
                  DimensionError);
}

TEST_CASE("backward: analytic gradients") {
  std::mt19937_64 rng(11);
  const ComplexTensor x0 = ComplexTensor::randn({3, 4}, rng);
  {
    Tape tape;
    Var x = tape.leaf(x0);
    tape.backward(ad::sum_real(tape, x));
    CHECK(tape.grad(x).identical(ComplexTensor::ones({3, 4})));
  }
  {
    Tape tape;
    Var x = tape.leaf(x0);
    tape.backward(ad::squared_norm(tape, x));
    CHECK(max_abs_diff(tape.grad(x), cdouble(2.0) * x0) < 1e-15);
  }
  {
    Tape tape;
    Var x = tape.leaf(x0);
    CHECK_THROWS_AS(tape.backward(ad::scale(tape, x, 2.0)), ContractError);
  }
}

TEST_CASE("backward: every primitive matches central differences") {
  std::mt19937_64 rng(2024);
  const ComplexTensor img = ComplexTensor::randn({4, 4}, rng);
  const ComplexTensor other = ComplexTensor::randn({4, 4}, rng);
  const ComplexTensor mask = [] {
    ComplexTensor m({4, 4});
    for (std::size_t i = 0; i < m.numel(); ++i) m[i] = (i % 3 == 0) ? 1.0 : 0.0;
    return m;
  }();
  auto maps = std::make_shared<const ComplexTensor>(ComplexTensor::randn({3, 4, 4}, rng));
  auto shared_mask = std::make_shared<const ComplexTensor>(mask);

  struct Case {
    const char* name;
    UnaryOp op;
    ComplexTensor input;
    bool real_only;
  };
  const ComplexTensor kernel = ComplexTensor::randn({3, 2, 3, 3}, rng, 1.0, true);
  const ComplexTensor chan = away_from_zero(ComplexTensor::randn({1, 2, 4, 4}, rng, 1.0, true));
  std::vector<Case> cases = {
      {"add", [&](Tape& t, const Var& x) { return ad::add(t, x, Var::constant(other)); }, img,
       false},
      {"sub", [&](Tape& t, const Var& x) { return ad::sub(t, Var::constant(other), x); }, img,
       false},
      {"scale", [](Tape& t, const Var& x) { return ad::scale(t, x, cdouble(0.3, -1.7)); }, img,
       false},
      {"cmul", [&](Tape& t, const Var& x) { return ad::cmul(t, x, Var::constant(other)); }, img,
       false},
      {"cmul_square", [](Tape& t, const Var& x) { return ad::cmul(t, x, x); }, img, false},
      {"fft2", [](Tape& t, const Var& x) { return ad::fft2(t, x); }, img, false},
      {"ifft2", [](Tape& t, const Var& x) { return ad::ifft2(t, x); }, img, false},
      {"mask_apply", [&](Tape& t, const Var& x) { return ad::mask_apply(t, x, shared_mask); },
       img, false},
      {"coil_expand", [&](Tape& t, const Var& x) { return ad::coil_expand(t, x, maps); }, img,
       false},
      {"coil_combine", [&](Tape& t, const Var& x) { return ad::coil_combine(t, x, maps); },
       ComplexTensor::randn({3, 4, 4}, rng), false},
      {"to_channels", [](Tape& t, const Var& x) { return ad::to_channels(t, x); }, img, false},
      {"from_channels", [](Tape& t, const Var& x) { return ad::from_channels(t, x); }, chan,
       true},
      {"relu", [](Tape& t, const Var& x) { return ad::relu(t, x); }, chan, true},
      {"conv2d_input",
       [&](Tape& t, const Var& x) { return ad::conv2d(t, x, Var::constant(kernel)); }, chan,
       true},
      {"conv2d_kernel",
       [&](Tape& t, const Var& w) { return ad::conv2d(t, Var::constant(chan), w); }, kernel,
       true},
      {"squared_norm", [](Tape& t, const Var& x) { return ad::squared_norm(t, x); }, img, false},
      {"sum_real", [](Tape& t, const Var& x) { return ad::sum_real(t, x); }, img, false},
      {"l1_complex",
       [&](Tape& t, const Var& x) { return ad::l1_complex(t, x, Var::constant(other)); }, img,
       false},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    const GradPair g = check_unary(c.op, c.input, rng, c.real_only);
    CHECK(rel_err(g.autodiff, g.numeric) < 1e-5);
  }
}

TEST_CASE("backward: random three-layer conv net against central differences") {
  std::mt19937_64 rng(7);
  Parameter w1("w1", ComplexTensor::randn({4, 2, 3, 3}, rng, 0.4, true));
  Parameter w2("w2", ComplexTensor::randn({4, 4, 3, 3}, rng, 0.4, true));
  Parameter w3("w3", ComplexTensor::randn({2, 4, 3, 3}, rng, 0.4, true));
  const ComplexTensor input = ComplexTensor::randn({6, 6}, rng);
  const ComplexTensor target = ComplexTensor::randn({6, 6}, rng);

  auto forward = [&](Tape& t) {
    Var h = ad::to_channels(t, Var::constant(input));
    h = ad::relu(t, ad::conv2d(t, h, t.param(w1)));
    h = ad::relu(t, ad::conv2d(t, h, t.param(w2)));
    h = ad::conv2d(t, h, t.param(w3));
    Var out = ad::add(t, ad::from_channels(t, h), Var::constant(input));
    return ad::squared_norm(t, ad::sub(t, out, Var::constant(target)));
  };
  Tape tape;
  tape.backward(forward(tape));
  CHECK(tape.meter().live() == 0);

  for (Parameter* p : {&w1, &w2, &w3}) {
    CAPTURE(p->name);
    const ComplexTensor saved = p->value;
    ComplexTensor fd = finite_difference_gradient(
        [&](const ComplexTensor& v) {
          p->value = v;
          Tape t(std::make_shared<ActivationMeter>(), false);
          const double loss = forward(t).value().item().real();
          p->value = saved;
          return loss;
        },
        saved, 1e-6, true);
    CHECK(rel_err(p->grad, fd) < 1e-5);
  }
}

TEST_CASE("fft2: definition, inversion, orthonormality") {
  ComplexTensor delta({4, 4});
  delta[0] = 1.0;
  CHECK(max_abs_diff(fft2(delta), ComplexTensor::full({4, 4}, 0.25)) < 1e-15);

  std::mt19937_64 rng(5);
  const ComplexTensor x = ComplexTensor::randn({8, 8}, rng);
  CHECK(max_abs_diff(ifft2(fft2(x)), x) < 1e-12);
  CHECK(std::abs(norm2(fft2(x)) - norm2(x)) < 1e-12 * norm2(x));

  const ComplexTensor batch = ComplexTensor::randn({3, 4, 8}, rng);
  CHECK(max_abs_diff(fft2(batch), mriunroll::testing::naive_dft2(batch)) < 1e-12);
  CHECK(max_abs_diff(ifft2(batch), mriunroll::testing::naive_dft2(batch, +1.0)) < 1e-12);

  CHECK_THROWS_AS(fft2(ComplexTensor::zeros({6, 8})), UnsupportedSizeError);
  CHECK_THROWS_AS(ifft2(ComplexTensor::zeros({8, 12})), UnsupportedSizeError);
}

TEST_CASE("fft2 property: Parseval and inversion over random shapes") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> log_extent(0, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t h = std::size_t{1} << log_extent(rng);
    const std::size_t w = std::size_t{1} << log_extent(rng);
    const ComplexTensor x = ComplexTensor::randn({2, h, w}, rng);
    const ComplexTensor k = fft2(x);
    CHECK(std::abs(norm2(k) - norm2(x)) <= 1e-12 * norm2(x));
    CHECK(max_abs_diff(ifft2(k), x) < 1e-12);
  }
}

TEST_CASE("accounting: tape peak equals the per-op schedule") {
  std::mt19937_64 rng(1);
  Parameter w1("w1", ComplexTensor::randn({3, 2, 3, 3}, rng, 0.3, true));
  Parameter w2("w2", ComplexTensor::randn({2, 3, 3, 3}, rng, 0.3, true));
  const ComplexTensor img = ComplexTensor::randn({8, 8}, rng);
  Tape tape;
  Var x = tape.leaf(img);
  Var c = ad::to_channels(tape, x);                            // 0
  Var h = ad::conv2d(tape, ad::relu(tape, c), tape.param(w1));  // relu 128 + conv 128
  h = ad::conv2d(tape, ad::relu(tape, h), tape.param(w2));      // relu 192 + conv 192
  Var out = ad::from_channels(tape, h);                         // 0
  Var loss = ad::l1_complex(tape, out, Var::constant(img));     // 64
  const std::size_t expected = 128 + 128 + 192 + 192 + 64;
  CHECK(tape.meter().live() == expected);
  CHECK(tape.meter().peak() == expected);
  tape.backward(loss);
  CHECK(tape.meter().live() == 0);
  CHECK(tape.meter().peak() == expected);
}

TEST_CASE("accounting property: peak never below live") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    Var x = tape.leaf(ComplexTensor::randn({4, 4}, rng));
    Var h = x;
    for (int k = 0; k < 12; ++k) {
      switch (pick(rng)) {
        case 0: h = ad::cmul(tape, h, x); break;
        case 1: h = ad::fft2(tape, h); break;
        case 2: h = ad::scale(tape, h, 0.5); break;
        default: h = ad::add(tape, h, x); break;
      }
      CHECK(tape.meter().peak() >= tape.meter().live());
    }
    tape.backward(ad::squared_norm(tape, h));
    CHECK(tape.meter().live() == 0);
  }
}

TEST_CASE("tape release without backward returns live count to zero") {
  auto meter = std::make_shared<ActivationMeter>();
  {
    Tape tape(meter);
    Var x = tape.leaf(ComplexTensor::ones({16}));
    ad::squared_norm(tape, ad::cmul(tape, x, x));
    CHECK(meter->live() == 48);
  }
  CHECK(meter->live() == 0);
  CHECK(meter->peak() == 48);
}

namespace {

// Chain of `blocks` conv-relu-conv residual blocks on a two-channel image.
struct ConvChain {
  std::vector<Parameter> weights;
  ConvChain(int blocks, std::mt19937_64& rng) {
    weights.reserve(static_cast<std::size_t>(2 * blocks));
    for (int b = 0; b < blocks; ++b) {
      weights.emplace_back("a", ComplexTensor::randn({3, 2, 3, 3}, rng, 0.3, true));
      weights.emplace_back("b", ComplexTensor::randn({2, 3, 3, 3}, rng, 0.3, true));
    }
  }
  Var block(Tape& t, int b, const Var& x) {
    Var h = ad::conv2d(t, x, t.param(weights[2 * b]));
    h = ad::conv2d(t, ad::relu(t, h), t.param(weights[2 * b + 1]));
    return ad::add(t, x, h);
  }
  void zero_grad() {
    for (auto& w : weights) w.zero_grad();
  }
};

}  // namespace

TEST_CASE("checkpoint_segment: identity stores only its input") {
  Tape tape;
  Var x = tape.leaf(ComplexTensor::ones({4, 4}));
  Var out = checkpoint_segment(
      tape, [](Tape&, std::span<const Var> in) { return in[0]; }, std::span<const Var>(&x, 1));
  CHECK(out.value().identical(x.value()));
  CHECK(tape.meter().live() == 16);
  tape.backward(ad::sum_real(tape, out));
  CHECK(tape.grad(x).identical(ComplexTensor::ones({4, 4})));
  CHECK(tape.meter().live() == 0);
}

TEST_CASE("checkpoint_segment: gradients equal plain backprop, peak per accounting model") {
  std::mt19937_64 rng(31);
  const int blocks = 4;
  ConvChain chain(blocks, rng);
  const ComplexTensor input = ComplexTensor::randn({1, 2, 8, 8}, rng, 1.0, true);
  const std::size_t plane = 64;

  Tape plain;
  Var h = Var::constant(input);
  for (int b = 0; b < blocks; ++b) h = chain.block(plain, b, h);
  plain.backward(ad::squared_norm(plain, h));
  std::vector<ComplexTensor> reference;
  for (auto& w : chain.weights) reference.push_back(w.grad);
  const std::size_t plain_peak = plain.meter().peak();
  chain.zero_grad();

  Tape ckpt;
  Var c = Var::constant(input);
  for (int b = 0; b < blocks; ++b) {
    c = checkpoint_segment(
        ckpt, [&chain, b](Tape& t, std::span<const Var> in) { return chain.block(t, b, in[0]); },
        std::span<const Var>(&c, 1));
  }
  ckpt.backward(ad::squared_norm(ckpt, c));
  for (std::size_t i = 0; i < reference.size(); ++i) {
    CHECK(rel_err(chain.weights[i].grad, reference[i]) < 1e-8);
  }
  // Block footprint: conv input 2P + relu 3P + conv input 3P = 8P; the
  // squared norm saves 2P.
  const std::size_t block_cost = 8 * plane;
  CHECK(plain_peak == blocks * block_cost + 2 * plane);
  // Checkpoints hold every block input (2P each); the largest moment is the
  // last block's recomputation, after the loss node has released.
  CHECK(ckpt.meter().peak() == blocks * 2 * plane + block_cost);
  CHECK(ckpt.meter().peak() < plain_peak);
  CHECK(ckpt.meter().live() == 0);
}

TEST_CASE("checkpoint_segment: impure segment is rejected") {
  Tape tape;
  Var x = tape.leaf(ComplexTensor::ones({4}));
  int calls = 0;
  Var out = checkpoint_segment(
      tape,
      [&calls](Tape& t, std::span<const Var> in) {
        ++calls;
        return ad::scale(t, in[0], static_cast<double>(calls));
      },
      std::span<const Var>(&x, 1));
  CHECK_THROWS_AS(tape.backward(ad::sum_real(tape, out)), ContractError);
}
