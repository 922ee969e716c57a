// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset. Exit status is 0 only when every selected
// criterion passes, except those named with --known-failure N; those still
// print FAIL, marked as known.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unistd.h>

#include "mriunroll/coil_maps.hpp"
#include "mriunroll/cs.hpp"
#include "mriunroll/data.hpp"
#include "mriunroll/experiment.hpp"
#include "mriunroll/mask.hpp"
#include "mriunroll/metrics.hpp"
#include "mriunroll/ops.hpp"
#include "mriunroll/train.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace mriunroll;
using namespace mriunroll::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string fixed(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ComplexTensor flat_values(UnrolledNetwork& net) {
  std::vector<cdouble> v;
  for (auto* p : net.parameters()) v.insert(v.end(), p->value.data().begin(), p->value.data().end());
  return ComplexTensor({v.size()}, v);
}

ComplexTensor flat_grads(UnrolledNetwork& net) {
  std::vector<cdouble> v;
  for (auto* p : net.parameters()) v.insert(v.end(), p->grad.data().begin(), p->grad.data().end());
  return ComplexTensor({v.size()}, v);
}

TrainConfig train_config(Strategy s, int steps, int batch, std::uint64_t seed) {
  TrainConfig c;
  c.strategy = s;
  c.total_iterations = steps;
  c.batch_size = batch;
  c.seed = seed;
  return c;
}

// ---------------------------------------------------------------------------

Outcome adjointness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    MaskSpec ms;
    ms.height = ms.width = 64;
    ms.acceleration = k % 2 == 0 ? 2.0 : 4.0;
    ms.kind = k % 4 < 2 ? MaskKind::poisson_disc_2d : MaskKind::random_1d_cartesian;
    ms.seed = 1000 + k;
    const SensingModel model(make_mask(ms), make_coil_maps(4, 64, 64, 2000 + k));
    const ComplexTensor x = random_tensor({64, 64}, rng);
    const ComplexTensor y = random_tensor({4, 64, 64}, rng);
    const cdouble lhs = inner(forward_A(model, x), y);
    const cdouble rhs = inner(x, adjoint_A(model, y));
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-10 && secs < 10.0,
          "worst rel err " + sci(worst) + " over 100 models, " + fixed(secs, 1) + " s"};
}

// ---------------------------------------------------------------------------

using UnaryOp = std::function<Var(Tape&, const Var&)>;

double op_fd_error(const UnaryOp& op, const ComplexTensor& x, std::mt19937_64& rng,
                   bool real_only) {
  Tape shape_tape(std::make_shared<ActivationMeter>(), false);
  const ComplexTensor probe =
      ComplexTensor::randn(op(shape_tape, Var::constant(x)).shape(), rng, 1.0, real_only);
  auto value = [&](const ComplexTensor& v) {
    Tape t(std::make_shared<ActivationMeter>(), false);
    return inner(probe, op(t, Var::constant(v)).value()).real();
  };
  Tape tape;
  Var leaf = tape.leaf(x);
  Var out = op(tape, leaf);
  tape.backward(ad::sum_real(tape, ad::cmul(tape, out, Var::constant(conj(probe)))));
  return rel_err(tape.grad(leaf), finite_difference_gradient(value, x, 1e-6, real_only));
}

ComplexTensor away_from_kink(ComplexTensor t) {
  for (auto& v : t.data()) {
    if (std::abs(v.real()) < 0.05) v = {v.real() < 0 ? -0.1 : 0.1, v.imag()};
  }
  return t;
}

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(202);
  const ComplexTensor img = random_tensor({8, 8}, rng);
  const ComplexTensor other = random_tensor({8, 8}, rng);
  const SensingModel model = small_model(8, 3, 2.0, 21);
  auto mask = model.shared_mask();
  auto maps = model.shared_coil_maps();
  const ComplexTensor y = forward_A(model, random_tensor({8, 8}, rng));
  const ComplexTensor ahy = adjoint_A(model, y);
  const ComplexTensor kernel = ComplexTensor::randn({3, 2, 3, 3}, rng, 1.0, true);
  const ComplexTensor chan = away_from_kink(ComplexTensor::randn({1, 2, 8, 8}, rng, 1.0, true));

  struct Case {
    const char* name;
    UnaryOp op;
    ComplexTensor input;
    bool real_only;
  };
  const std::vector<Case> cases = {
      {"add", [&](Tape& t, const Var& x) { return ad::add(t, x, Var::constant(other)); }, img,
       false},
      {"sub", [&](Tape& t, const Var& x) { return ad::sub(t, Var::constant(other), x); }, img,
       false},
      {"scalar_mul", [](Tape& t, const Var& x) { return ad::scale(t, x, cdouble(0.7, -1.1)); },
       img, false},
      {"complex_mul", [&](Tape& t, const Var& x) { return ad::cmul(t, x, Var::constant(other)); },
       img, false},
      {"conv2d", [&](Tape& t, const Var& x) { return ad::conv2d(t, x, Var::constant(kernel)); },
       chan, true},
      {"conv2d_weights",
       [&](Tape& t, const Var& w) { return ad::conv2d(t, Var::constant(chan), w); }, kernel, true},
      {"relu", [](Tape& t, const Var& x) { return ad::relu(t, x); }, chan, true},
      {"fft2", [](Tape& t, const Var& x) { return ad::fft2(t, x); }, img, false},
      {"ifft2", [](Tape& t, const Var& x) { return ad::ifft2(t, x); }, img, false},
      {"mask_apply", [&](Tape& t, const Var& x) { return ad::mask_apply(t, x, mask); }, img,
       false},
      {"coil_expand", [&](Tape& t, const Var& x) { return ad::coil_expand(t, x, maps); }, img,
       false},
      {"coil_combine", [&](Tape& t, const Var& x) { return ad::coil_combine(t, x, maps); },
       random_tensor({3, 8, 8}, rng), false},
      {"to_channels", [](Tape& t, const Var& x) { return ad::to_channels(t, x); }, img, false},
      {"from_channels", [](Tape& t, const Var& x) { return ad::from_channels(t, x); }, chan,
       true},
      {"l1_complex",
       [&](Tape& t, const Var& x) { return ad::l1_complex(t, x, Var::constant(other)); }, img,
       false},
      {"dc_step", [&](Tape& t, const Var& x) { return ad::dc_step(t, model, x, y); }, img, false},
      {"cg_solve", [&](Tape& t, const Var& z) { return ad::cg_solve(t, model, ahy, z, 8); }, img,
       false},
  };
  double worst = 0.0;
  std::string worst_name;
  for (const auto& c : cases) {
    const double e = op_fd_error(c.op, c.input, rng, c.real_only);
    if (e >= worst) {
      worst = e;
      worst_name = c.name;
    }
  }

  // Two-module PGD network, all parameters.
  const ComplexTensor target = random_tensor({8, 8}, rng);
  const ComplexTensor yt = forward_A(model, target);
  UnrolledNetwork net(small_spec(NetKind::pgd, 2, 2, 2));
  randomize(net, rng, 0.3);
  Tape tape;
  Var out = tape.leaf(adjoint_A(model, yt));
  for (int m = 1; m <= 2; ++m) out = forward_module(tape, net, m, out, model, yt);
  tape.backward(ad::squared_norm(tape, ad::sub(tape, out, Var::constant(target))));
  double net_worst = 0.0;
  for (auto* p : net.parameters()) {
    const ComplexTensor saved = p->value;
    const ComplexTensor fd = finite_difference_gradient(
        [&](const ComplexTensor& w) {
          p->value = w;
          return std::pow(norm2(forward_full(net, model, yt, 2) - target), 2);
        },
        saved, 1e-6, true);
    p->value = saved;
    net_worst = std::max(net_worst, rel_err(p->grad, fd));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-5 && net_worst < 1e-5 && secs < 60.0,
          std::to_string(cases.size()) + " ops worst " + sci(worst) + " (" + worst_name +
              "), 2-module PGD " + sci(net_worst) + ", " + fixed(secs, 1) + " s"};
}

// ---------------------------------------------------------------------------

std::vector<Sample> small_desk(std::uint64_t seed, std::size_t count = 8) {
  DatasetSpec s;
  s.height = s.width = 32;
  s.train = count;
  s.models_per_split = 2;
  s.seed = seed;
  return generate_dataset(s, Split::train).samples;
}

Outcome checkpointing_equals_bp() {
  const auto data = small_desk(31);
  const std::size_t pixels = 32 * 32;
  UnrolledNetwork a(small_spec(NetKind::pgd, 4, 1, 8));
  std::mt19937_64 rng(32);
  randomize(a, rng, 0.05);
  UnrolledNetwork b = clone(a);
  const TrainConfig ce = train_config(Strategy::e2e_bp, 10, 2, 33);
  const TrainConfig cc = train_config(Strategy::checkpointing, 10, 2, 33);
  Trainer te(a, data, ce), tc(b, data, cc);
  double worst = 0.0;
  for (int s = 0; s < 10; ++s) {
    const ComplexTensor a0 = flat_values(a), b0 = flat_values(b);
    te.run(1);
    tc.run(1);
    worst = std::max(worst, relative_error(flat_values(b) - b0, flat_values(a) - a0));
  }
  const std::size_t pe = te.report().peak_activation_elements;
  const std::size_t pc = tc.report().peak_activation_elements;
  const std::size_t formula = predicted_peak(b.spec(), cc, pixels);
  return {worst < 1e-8 && pc < pe && pc == formula,
          "delta rel " + sci(worst) + ", peak " + std::to_string(pc) + " (formula " +
              std::to_string(formula) + ") vs e2e " + std::to_string(pe)};
}

// ---------------------------------------------------------------------------

Outcome mel_equals_bp() {
  const auto data = small_desk(41, 4);
  auto one_step = [&](int cg_iterations, Strategy s) {
    NetworkSpec spec = small_spec(NetKind::modl, 3, 1, 8);
    spec.cg_iterations = cg_iterations;
    UnrolledNetwork net(spec);
    std::mt19937_64 rng(42);
    randomize(net, rng, 0.2);
    Trainer t(net, data, train_config(s, 1, 2, 43));
    t.run(1);
    return flat_grads(net);
  };
  // CG accuracy at the chosen depth on a representative right-hand side.
  const Sample& s0 = data.front();
  const int cg_iterations = 30;
  const CgResult cg = cg_solve(*s0.model, adjoint_A(*s0.model, s0.kspace),
                               adjoint_A(*s0.model, s0.kspace), cg_iterations);
  const double residual = cg.relative_residuals.back();
  const double exact = relative_error(one_step(cg_iterations, Strategy::mel),
                                      one_step(cg_iterations, Strategy::e2e_bp));
  const double truncated =
      relative_error(one_step(1, Strategy::mel), one_step(1, Strategy::e2e_bp));
  return {residual < 1e-10 && exact < 1e-4 && truncated > 1e-2,
          "CG residual " + sci(residual) + ": grad rel " + sci(exact) +
              "; 1 CG step: grad rel " + sci(truncated)};
}

// ---------------------------------------------------------------------------

Outcome pgleam_equals_gleam() {
  const auto data = small_desk(51);
  UnrolledNetwork serial(small_spec(NetKind::pgd, 4, 4, 8));
  UnrolledNetwork parallel = clone(serial);
  TrainConfig c = train_config(Strategy::gleam, 10, 2, 52);
  train_gleam(serial, data, c);
  c.workers = 2;
  const TrainReport r = train_gleam_parallel(parallel, data, c);
  const double dev = max_param_abs_diff(serial, parallel);
  return {dev < 1e-12 && r.steps_completed == 10,
          "D=2 M=4 10 steps: max param deviation " + sci(dev)};
}

// ---------------------------------------------------------------------------

Outcome memory_ratio() {
  DatasetSpec ds;
  ds.train = 4;
  ds.models_per_split = 1;
  ds.seed = 61;
  const auto data = generate_dataset(ds, Split::train).samples;
  NetworkSpec spec = small_spec(NetKind::pgd, 4, 4, 8);
  UnrolledNetwork g(spec), e(spec);
  const TrainReport rg = train_gleam(g, data, train_config(Strategy::gleam, 1, 2, 62));
  const TrainReport re = train_e2e(e, data, train_config(Strategy::e2e_bp, 1, 2, 62));
  const double ratio = static_cast<double>(rg.peak_activation_elements) /
                       static_cast<double>(re.peak_activation_elements);
  const double bound = 1.1 / 4.0;
  return {ratio <= bound, "peak " + std::to_string(rg.peak_activation_elements) + " / " +
                              std::to_string(re.peak_activation_elements) + " = " +
                              fixed(ratio, 4) + " (bound " + fixed(bound, 4) + ")"};
}

// ---------------------------------------------------------------------------
// Trained models shared by criteria 7 to 10.

constexpr int kSteps = 2000;
constexpr int kFeatures = 8;
constexpr double kLearningRate = 3e-3;
constexpr int kBatch = 1;

struct Desk {
  Dataset train, val, test;
};

const Desk& desk() {
  static const Desk d = [] {
    DatasetSpec s;
    s.seed = 1;
    return Desk{generate_dataset(s, Split::train), generate_dataset(s, Split::val),
                generate_dataset(s, Split::test)};
  }();
  return d;
}

struct Trained {
  std::unique_ptr<UnrolledNetwork> net;
  double test_psnr;
  double seconds;
};

Trained train_desk(Strategy strategy, int n, int m) {
  NetworkSpec spec;
  spec.kind = NetKind::pgd;
  spec.iterations = n;
  spec.modules = m;
  spec.cnn.features = kFeatures;
  spec.seed = 3;
  auto net = std::make_unique<UnrolledNetwork>(spec);
  TrainConfig c = train_config(strategy, kSteps, kBatch, 5);
  c.adam.lr = kLearningRate;
  const auto t0 = std::chrono::steady_clock::now();
  Trainer t(*net, desk().train.samples, c);
  t.run_all();
  const double secs = seconds_since(t0);
  const double psnr = evaluate_network(*net, desk().test.samples, n).psnr_summary().mean;
  return {std::move(net), psnr, secs};
}

std::map<std::string, Trained>& trained_cache() {
  static std::map<std::string, Trained> cache;
  return cache;
}

const Trained& trained(const std::string& key) {
  auto& cache = trained_cache();
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  Trained t = key == "gleam4"   ? train_desk(Strategy::gleam, 4, 4)
              : key == "e2e4"   ? train_desk(Strategy::e2e_bp, 4, 1)
                                : train_desk(Strategy::gleam, 12, 3);
  return cache.emplace(key, std::move(t)).first->second;
}

Outcome generalization_parity() {
  const Trained& g = trained("gleam4");
  const Trained& e = trained("e2e4");
  const double gap = g.test_psnr - e.test_psnr;
  const double minutes = (g.seconds + e.seconds) / 60.0;
  return {std::abs(gap) <= 0.5 && minutes <= 30.0,
          "GLEAM " + fixed(g.test_psnr) + " dB vs e2e " + fixed(e.test_psnr) + " dB (gap " +
              fixed(gap) + " dB, " + std::to_string(kSteps) + " steps, " + fixed(minutes, 1) +
              " min)"};
}

Outcome capacity_at_fixed_memory() {
  const Trained& g = trained("gleam12");
  const Trained& e = trained("e2e4");
  const double gain = g.test_psnr - e.test_psnr;
  return {gain >= 0.3, "GLEAM N=12 M=3 " + fixed(g.test_psnr) + " dB vs e2e N=4 " +
                           fixed(e.test_psnr) + " dB (gain " + fixed(gain) + " dB)"};
}

Outcome stagewise_monotonicity() {
  const Trained& g = trained("gleam4");
  const auto rows = inference_sweep(*g.net, desk().test.samples);
  bool ok = true;
  std::string seq;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].psnr.mean < rows[i - 1].psnr.mean - 0.1) ok = false;
    seq += (i ? " " : "") + fixed(rows[i].psnr.mean);
  }
  return {ok, "PSNR by n_inf: " + seq};
}

Outcome cs_inferiority() {
  const Trained& g = trained("gleam4");
  CsConfig cs;
  cs.iterations = 100;
  const LambdaChoice choice =
      tune_cs_lambda(desk().val.samples, {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2}, cs);
  cs.lambda = choice.lambda;
  const double cs_psnr = evaluate_cs(desk().test.samples, cs).psnr_summary().mean;
  return {g.test_psnr > cs_psnr, "GLEAM " + fixed(g.test_psnr) + " dB vs CS " +
                                     fixed(cs_psnr) + " dB (lambda " + sci(choice.lambda) +
                                     ")"};
}

// ---------------------------------------------------------------------------

Outcome cs_descent() {
  std::mt19937_64 rng(1101);
  int violations = 0;
  double worst_rise = 0.0;
  for (int k = 0; k < 20; ++k) {
    const SensingModel model = small_model(32, 2 + k % 3, k % 2 ? 4.0 : 2.0, 1200 + k);
    const ComplexTensor x = make_phantom(32, 32, 1300 + k);
    ComplexTensor y = forward_A(model, x);
    y += apply_mask(ComplexTensor::randn(y.shape(), rng, 0.01), model.mask());
    CsConfig c;
    c.iterations = 100;
    c.lambda = std::pow(10.0, -4.0 + 2.5 * (k / 19.0));
    const CsResult r = cs_reconstruct(model, y, c);
    for (std::size_t i = 1; i < r.objective.size(); ++i) {
      const double rise = r.objective[i] - r.objective[i - 1];
      if (rise > 1e-12 * std::abs(r.objective[i - 1])) ++violations;
      worst_rise = std::max(worst_rise, rise);
    }
  }
  return {violations == 0, std::to_string(violations) + " increases over 20 problems x 100 "
                           "iterations (largest step change " + sci(worst_rise) + ")"};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() /
                        ("mriunroll_acceptance_" + std::to_string(::getpid()));
  nlohmann::json cfg = {
      {"dataset",
       {{"height", 32}, {"width", 32}, {"train", 8}, {"val", 2}, {"test", 2},
        {"models_per_split", 2}, {"seed", 7}}},
      {"network",
       {{"kind", "modl"},
        {"iterations", 4},
        {"modules", 4},
        {"cnn", {{"kind", "skip5"}, {"features", 4}, {"invertible", true}}},
        {"seed", 8}}},
      {"train", {{"batch_size", 2}, {"total_iterations", 5}, {"seed", 9}}}};
  bool ok = true;
  int compared = 0;
  for (const char* strategy : {"e2e_bp", "checkpointing", "mel", "gleam"}) {
    std::vector<nlohmann::json> manifests;
    std::vector<std::string> reports;
    for (const char* run : {"a", "b"}) {
      nlohmann::json c = cfg;
      c["output_dir"] = (root / run).string();
      c["train"]["strategy"] = strategy;
      const auto ec = ExperimentConfig::from_json(c);
      if (std::string(strategy) == "e2e_bp") cmd_generate(ec);
      manifests.push_back(cmd_train(ec));
      reports.push_back(slurp(root / run / strategy / "report.json"));
    }
    ok = ok && manifests[0] == manifests[1] && reports[0] == reports[1] && !reports[0].empty();
    ++compared;
  }
  fs::remove_all(root);

  const auto data = small_desk(71);
  UnrolledNetwork serial(small_spec(NetKind::pgd, 4, 4, 4));
  UnrolledNetwork parallel = clone(serial);
  TrainConfig c = train_config(Strategy::gleam, 10, 2, 72);
  const TrainReport rs = train_gleam(serial, data, c);
  c.workers = 2;
  const TrainReport rp = train_gleam_parallel(parallel, data, c);
  const double dev = max_param_abs_diff(serial, parallel);
  ok = ok && dev < 1e-12;
  return {ok, std::to_string(compared) + " serial strategies bit-identical across reruns; "
              "P-GLEAM deviation " + sci(dev)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"adjointness", adjointness},
      {"gradient correctness", gradients},
      {"checkpointing matches backprop", checkpointing_equals_bp},
      {"mel matches backprop", mel_equals_bp},
      {"p-gleam matches gleam", pgleam_equals_gleam},
      {"memory ratio", memory_ratio},
      {"generalization parity", generalization_parity},
      {"capacity at fixed memory", capacity_at_fixed_memory},
      {"stage-wise monotonicity", stagewise_monotonicity},
      {"cs inferiority", cs_inferiority},
      {"cs descent", cs_descent},
      {"determinism", determinism},
  };
  std::set<int> selected, known;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--known-failure" && i + 1 < argc) {
      known.insert(std::atoi(argv[++i]));
    } else {
      selected.insert(std::atoi(arg.c_str()));
    }
  }

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const bool excused = !o.pass && known.count(id);
    failed += !o.pass && !excused;
    std::printf("%s  %2d %s: %s%s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str(), excused ? " [known failure]" : "");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
