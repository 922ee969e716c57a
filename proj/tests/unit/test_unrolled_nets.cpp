// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "doctest.h"
#include "mriunroll/errors.hpp"
#include "mriunroll/network.hpp"
#include "mriunroll/ops.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace mriunroll;
using namespace mriunroll::testing;

TEST_CASE("zero-residual init: every module reduces to its DC update") {
  std::mt19937_64 rng(1);
  const SensingModel model = small_model(16, 2, 2.0, 3);
  const ComplexTensor y = forward_A(model, ComplexTensor::randn({16, 16}, rng));
  const ComplexTensor x = ComplexTensor::randn({16, 16}, rng);

  UnrolledNetwork pgd(small_spec(NetKind::pgd, 2, 2));
  Tape t1(std::make_shared<ActivationMeter>(), false);
  const ComplexTensor out = forward_module(t1, pgd, 1, Var::constant(x), model, y).value();
  CHECK(max_abs_diff(out, dc_step(model, x, y)) < 1e-14);

  UnrolledNetwork modl(small_spec(NetKind::modl, 2, 2));
  Tape t2(std::make_shared<ActivationMeter>(), false);
  const ComplexTensor out2 = forward_module(t2, modl, 2, Var::constant(x), model, y).value();
  CHECK(max_abs_diff(out2, cg_solve(model, adjoint_A(model, y), x, 10).x) < 1e-14);
}

TEST_CASE("modules match hand-composed DC + CNN sequences") {
  std::mt19937_64 rng(2);
  const SensingModel model = small_model(16, 2, 2.0, 5);
  const ComplexTensor y = forward_A(model, ComplexTensor::randn({16, 16}, rng));
  const ComplexTensor x = ComplexTensor::randn({16, 16}, rng);

  for (NetKind kind : {NetKind::pgd, NetKind::modl}) {
    UnrolledNetwork net(small_spec(kind, 4, 2));
    randomize(net, rng, 0.1);
    Tape tape(std::make_shared<ActivationMeter>(), false);
    const ComplexTensor got = forward_module(tape, net, 2, Var::constant(x), model, y).value();

    ComplexTensor h = x;
    for (int i = 2; i < 4; ++i) {
      h = kind == NetKind::pgd ? dc_step(model, h, y)
                               : cg_solve(model, adjoint_A(model, y), h, 10).x;
      h = net.block(i).apply_values(h);
    }
    CHECK(got.identical(h));
  }
}

TEST_CASE("forward_full composes module outputs bit for bit") {
  std::mt19937_64 rng(3);
  const SensingModel model = small_model(16, 2, 4.0, 9);
  const ComplexTensor y = forward_A(model, ComplexTensor::randn({16, 16}, rng));
  UnrolledNetwork net(small_spec(NetKind::pgd, 6, 3));
  randomize(net, rng, 0.1);

  Tape tape(std::make_shared<ActivationMeter>(), false);
  Var h = Var::constant(adjoint_A(model, y));
  std::vector<ComplexTensor> stages;
  for (int m = 1; m <= 3; ++m) {
    h = forward_module(tape, net, m, h, model, y);
    stages.push_back(h.value());
  }
  CHECK(forward_full(net, model, y, 6).identical(stages.back()));
  CHECK(forward_full(net, model, y, 2).identical(stages.front()));
  CHECK_THROWS_AS(forward_full(net, model, y, 0), ConfigError);
  CHECK_THROWS_AS(forward_full(net, model, y, 7), ConfigError);
  CHECK_THROWS_AS(forward_module(tape, net, 4, h, model, y), ConfigError);

  UnrolledNetwork single(small_spec(NetKind::pgd, 4, 4));
  randomize(single, rng, 0.1);
  Tape t2(std::make_shared<ActivationMeter>(), false);
  const ComplexTensor first =
      forward_module(t2, single, 1, Var::constant(adjoint_A(model, y)), model, y).value();
  CHECK(forward_full(single, model, y, 1).identical(first));
}

TEST_CASE("split_modules: divisibility and disjoint ownership") {
  UnrolledNetwork one(small_spec(NetKind::pgd, 8, 1));
  auto r1 = split_modules(one, 1);
  REQUIRE(r1.size() == 1);
  CHECK(r1[0].first == 0);
  CHECK(r1[0].last == 8);
  CHECK_THROWS_AS(split_modules(one, 3), ConfigError);
  CHECK_THROWS_AS(NetworkSpec(small_spec(NetKind::pgd, 8, 3)).validate(), ConfigError);

  UnrolledNetwork big(small_spec(NetKind::pgd, 24, 3, 2));
  const auto r = split_modules(big, 3);
  REQUIRE(r.size() == 3);
  for (int m = 0; m < 3; ++m) {
    CHECK(r[m].last - r[m].first == 8);
    CHECK(r[m].first == 8 * m);
  }
  std::set<std::uint64_t> seen;
  std::size_t total = 0;
  for (int m = 1; m <= 3; ++m) {
    for (auto* p : big.module_parameters(m)) {
      CHECK(seen.insert(p->id).second);
      ++total;
    }
  }
  CHECK(total == big.parameters().size());
}

TEST_CASE("parameter count formula matches enumeration") {
  for (int f : {1, 4, 8}) {
    for (int k : {1, 3, 5}) {
      NetworkSpec s = small_spec(NetKind::pgd, 2, 1, f);
      s.cnn.kernel = k;
      s.cnn.res_blocks = 3;
      UnrolledNetwork net(s);
      // 3 units of (f x 2) and (2 x f) taps, per iteration.
      const std::size_t literal = 2 * 3 * (2 * f * k * k + 2 * f * k * k);
      CHECK(net.parameter_count() == literal);
      CHECK(UnrolledNetwork::expected_parameter_count(s) == literal);

      NetworkSpec m = small_spec(NetKind::modl, 2, 1, f);
      m.cnn.kernel = k;
      UnrolledNetwork modl(m);
      const std::size_t literal5 = 2 * (2 * f + 3 * f * f + 2 * f) * k * k;
      CHECK(modl.parameter_count() == literal5);
      CHECK(UnrolledNetwork::expected_parameter_count(m) == literal5);
    }
  }
}

TEST_CASE("Lipschitz bound dominates measured ratios and is enforced") {
  std::mt19937_64 rng(4);
  for (CnnKind kind : {CnnKind::residual, CnnKind::skip5}) {
    CnnSpec s;
    s.kind = kind;
    s.features = 4;
    ProximalBlock block(s, rng, "b");
    for (auto* p : block.parameters()) p->value = ComplexTensor::randn(p->value.shape(), rng, 0.3, true);
    for (std::size_t u = 0; u < block.units(); ++u) {
      const double bound = block.lipschitz_bound(u);
      for (int trial = 0; trial < 20; ++trial) {
        const ComplexTensor a = ComplexTensor::randn({1, 2, 8, 8}, rng, 1.0, true);
        const ComplexTensor b =
            a + ComplexTensor::randn({1, 2, 8, 8}, rng, trial % 2 ? 1e-3 : 1.0, true);
        const double ratio = norm2(block.unit_residual_values(u, a) - block.unit_residual_values(u, b)) /
                             norm2(a - b);
        CHECK(ratio <= bound * (1 + 1e-12));
      }
    }
  }
  CnnSpec inv;
  inv.kind = CnnKind::skip5;
  inv.features = 4;
  inv.invertible = true;
  ProximalBlock block(inv, rng, "b");
  for (auto* p : block.parameters()) p->value = ComplexTensor::randn(p->value.shape(), rng, 0.5, true);
  CHECK(block.lipschitz_bound(0) > 0.9);
  block.enforce_contractivity();
  CHECK(block.lipschitz_bound(0) <= 0.9 * (1 + 1e-12));
  CHECK(block.lipschitz_bound(0) >= 0.9 * (1 - 1e-12));
}

TEST_CASE("invert: identity for zero residual, round trip for contractive blocks") {
  std::mt19937_64 rng(5);
  CnnSpec s;
  s.kind = CnnKind::skip5;
  s.features = 4;
  s.invertible = true;
  ProximalBlock zero(s, rng, "z");
  const ComplexTensor y = ComplexTensor::randn({8, 8}, rng);
  CHECK(zero.invert(y).identical(y));

  for (CnnKind kind : {CnnKind::skip5, CnnKind::residual}) {
    s.kind = kind;
    ProximalBlock block(s, rng, "c");
    for (auto* p : block.parameters()) p->value = ComplexTensor::randn(p->value.shape(), rng, 0.5, true);
    block.enforce_contractivity();
    for (int trial = 0; trial < 100; ++trial) {
      const ComplexTensor x = ComplexTensor::randn({16, 16}, rng);
      InversionStats stats;
      const ComplexTensor back = block.invert(x, &stats);
      CHECK(stats.iterations <= 50 * static_cast<int>(block.units()));
      CHECK(relative_error(block.apply_values(back), x) < 1e-8);
    }
  }
}

TEST_CASE("invert: expansive residual raises InversionError") {
  std::mt19937_64 rng(6);
  CnnSpec s;
  s.kind = CnnKind::skip5;
  s.features = 4;
  s.invertible = true;
  ProximalBlock block(s, rng, "x");
  // g(x) = -1.5 x: split into +x / -x channels, pass through, recombine.
  auto& layers = block.unit(0);
  for (auto& p : layers) p.value = ComplexTensor::zeros(p.value.shape());
  auto tap = [](ComplexTensor& w, std::size_t o, std::size_t i, double v) {
    w[((o * w.dim(1) + i) * 3 + 1) * 3 + 1] = v;
  };
  tap(layers[0].value, 0, 0, 1.0);
  tap(layers[0].value, 1, 1, 1.0);
  tap(layers[0].value, 2, 0, -1.0);
  tap(layers[0].value, 3, 1, -1.0);
  for (int l = 1; l <= 3; ++l) {
    for (std::size_t c = 0; c < 4; ++c) tap(layers[l].value, c, c, 1.0);
  }
  tap(layers[4].value, 0, 0, -1.5);
  tap(layers[4].value, 1, 1, -1.5);
  tap(layers[4].value, 0, 2, 1.5);
  tap(layers[4].value, 1, 3, 1.5);

  const ComplexTensor x = ComplexTensor::randn({8, 8}, rng);
  CHECK(relative_error(block.apply_values(x), cdouble(-0.5) * x) < 1e-14);
  CHECK_THROWS_AS(block.invert(x), InversionError);

  CnnSpec plain;
  ProximalBlock p(plain, rng, "p");
  CHECK_THROWS_AS(p.invert(x), ContractError);
}

TEST_CASE("2-module PGD network: parameter and input gradients vs finite differences") {
  std::mt19937_64 rng(7);
  const SensingModel model = small_model(8, 2, 2.0, 11);
  const ComplexTensor target = ComplexTensor::randn({8, 8}, rng);
  const ComplexTensor y = forward_A(model, target);
  NetworkSpec s = small_spec(NetKind::pgd, 2, 2, 2);
  UnrolledNetwork net(s);
  randomize(net, rng, 0.3);

  auto loss_value = [&]() {
    return std::pow(norm2(forward_full(net, model, y, 2) - target), 2);
  };
  Tape tape;
  Var x0 = tape.leaf(adjoint_A(model, y));
  Var out = forward_module(tape, net, 1, x0, model, y);
  out = forward_module(tape, net, 2, out, model, y);
  tape.backward(ad::squared_norm(tape, ad::sub(tape, out, Var::constant(target))));

  for (auto* p : net.parameters()) {
    const ComplexTensor saved = p->value;
    const ComplexTensor fd = finite_difference_gradient(
        [&](const ComplexTensor& w) {
          p->value = w;
          return loss_value();
        },
        saved, 1e-6, true);
    p->value = saved;
    CHECK(rel_err(p->grad, fd) < 1e-5);
  }
}

TEST_CASE("snapshot: bit-exact file round trip") {
  std::mt19937_64 rng(8);
  UnrolledNetwork net(small_spec(NetKind::modl, 4, 2));
  randomize(net, rng, 0.2);
  const auto path = std::filesystem::temp_directory_path() / "mriunroll_snapshot_test.bin";
  write_container(path, snapshot_container(net));
  UnrolledNetwork back = network_from_container(read_container(path));
  std::filesystem::remove(path);
  CHECK(back.spec().iterations == 4);
  CHECK(back.spec().modules == 2);
  const auto a = net.parameters();
  const auto b = back.parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]->name == b[i]->name);
    CHECK(a[i]->value.identical(b[i]->value));
  }
  const Container c = snapshot_container(net);
  CHECK(c.entries.front().attrs.at("module") == 1);
  CHECK(c.entries.back().attrs.at("module") == 2);
  CHECK(c.entries.back().attrs.at("layer") == 9);
  CHECK(decode_container(encode_container(c)).entries.size() == c.entries.size());
}
