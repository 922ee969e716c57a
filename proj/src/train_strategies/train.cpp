// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/train.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <thread>

#include "mriunroll/checkpoint.hpp"
#include "mriunroll/ops.hpp"

namespace mriunroll {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Holds `elements` on the meter for the lifetime of the guard.
class MeterHold {
 public:
  MeterHold(ActivationMeter& meter, std::size_t elements) : meter_(meter), elements_(elements) {
    meter_.acquire(elements_);
  }
  ~MeterHold() { meter_.release(elements_); }
  MeterHold(const MeterHold&) = delete;
  MeterHold& operator=(const MeterHold&) = delete;

 private:
  ActivationMeter& meter_;
  std::size_t elements_;
};

// Iteration i's saved elements; i's input needs grad when it is not the
// first iteration of the recorded span.
std::size_t iteration_footprint(const NetworkSpec& net, std::size_t pixels, bool input_grad) {
  return ProximalBlock::activation_footprint(net.cnn, pixels, input_grad);
}

std::size_t span_footprint(const NetworkSpec& net, std::size_t pixels, int first, int last) {
  std::size_t total = 0;
  for (int i = first; i < last; ++i) total += iteration_footprint(net, pixels, i > first);
  return total;
}

// Even partition of [0, n) into k segments.
std::vector<std::pair<int, int>> segments(int n, int k) {
  std::vector<std::pair<int, int>> out;
  for (int j = 0; j < k; ++j) out.emplace_back(j * n / k, (j + 1) * n / k);
  return out;
}

// Iterate positions (1..n-1) stored by MEL.
std::vector<int> mel_positions(int n, int k) {
  std::vector<int> out;
  for (int j = 1; j <= k; ++j) out.push_back(j * n / (k + 1));
  return out;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
}

struct Mailbox {
  std::mutex mu;
  std::condition_variable cv;
  std::vector<std::optional<ComplexTensor>> slots;
};

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::e2e_bp: return "e2e_bp";
    case Strategy::checkpointing: return "checkpointing";
    case Strategy::mel: return "mel";
    case Strategy::gleam: return "gleam";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "e2e_bp" || s == "e2e") return Strategy::e2e_bp;
  if (s == "checkpointing") return Strategy::checkpointing;
  if (s == "mel") return Strategy::mel;
  if (s == "gleam") return Strategy::gleam;
  throw ConfigError("unknown strategy '" + s + "' (expected e2e_bp, checkpointing, mel, gleam)");
}

void Adam::step(std::span<Parameter* const> params, double lr) {
  const double rate = lr > 0.0 ? lr : cfg_.lr;
  for (Parameter* p : params) {
    Slot& s = slots_[p->name];
    if (s.m.numel() != p->value.numel()) {
      s.m = ComplexTensor::zeros(p->value.shape());
      s.v = ComplexTensor::zeros(p->value.shape());
      s.t = 0;
    }
    ++s.t;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(s.t));
    auto update = [&](double g, double& m, double& v) {
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
      return rate * (m / c1) / (std::sqrt(v / c2) + cfg_.eps);
    };
    for (std::size_t i = 0; i < p->value.numel(); ++i) {
      const cdouble g = p->grad.numel() ? p->grad[i] : cdouble{};
      double mr = s.m[i].real(), mi = s.m[i].imag();
      double vr = s.v[i].real(), vi = s.v[i].imag();
      const double dr = update(g.real(), mr, vr);
      const double di = update(g.imag(), mi, vi);
      s.m[i] = {mr, mi};
      s.v[i] = {vr, vi};
      p->value[i] -= cdouble(dr, di);
    }
  }
}

void TrainConfig::validate(const NetworkSpec& net) const {
  net.validate();
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (total_iterations < 0) throw ConfigError("total_iterations must be >= 0");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (workers > 1) {
    if (strategy != Strategy::gleam) throw ConfigError("workers > 1 requires the gleam strategy");
    if (net.modules % workers != 0) {
      throw ConfigError("workers (" + std::to_string(workers) + ") must divide modules (" +
                        std::to_string(net.modules) + ")");
    }
  }
  if (!(adam.lr > 0.0) || adam.beta1 < 0.0 || adam.beta1 >= 1.0 || adam.beta2 < 0.0 ||
      adam.beta2 >= 1.0 || !(adam.eps > 0.0)) {
    throw ConfigError("invalid Adam hyperparameters");
  }
  if (!module_lr.empty()) {
    if (static_cast<int>(module_lr.size()) != net.modules) {
      throw ConfigError("module_lr needs one entry per module");
    }
    for (double v : module_lr) {
      if (!(v > 0.0)) throw ConfigError("module_lr entries must be > 0");
    }
  }
  if (strategy == Strategy::mel) {
    if (net.kind != NetKind::modl || !net.cnn.invertible) {
      throw ConfigError("mel requires a modl network with invertible proximal blocks");
    }
  }
  const int ncp = resolved_checkpoints(net);
  if (strategy == Strategy::checkpointing && (ncp < 1 || ncp > net.iterations)) {
    throw ConfigError("checkpointing needs 1 <= checkpoints <= iterations");
  }
  if (strategy == Strategy::mel && (ncp < 0 || ncp > net.iterations - 1)) {
    throw ConfigError("mel needs 0 <= checkpoints <= iterations - 1");
  }
}

int TrainConfig::resolved_checkpoints(const NetworkSpec& net) const {
  if (checkpoints >= 0) return checkpoints;
  return strategy == Strategy::checkpointing ? net.iterations : 0;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"strategy", to_string(c.strategy)},
          {"workers", c.workers},
          {"batch_size", c.batch_size},
          {"total_iterations", c.total_iterations},
          {"lr", c.adam.lr},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"eps_adam", c.adam.eps},
          {"checkpoints", c.checkpoints},
          {"module_lr", c.module_lr},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (j.contains("strategy")) c.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  c.workers = j.value("workers", c.workers);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.total_iterations = j.value("total_iterations", c.total_iterations);
  c.adam.lr = j.value("lr", c.adam.lr);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.eps = j.value("eps_adam", c.adam.eps);
  c.checkpoints = j.value("checkpoints", c.checkpoints);
  c.module_lr = j.value("module_lr", c.module_lr);
  if (!j.contains("seed")) throw ConfigError("train config requires an explicit seed");
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json val = nlohmann::json::array();
  for (const auto& [s, v] : validation) val.push_back({s, v});
  return {{"strategy", mriunroll::to_string(strategy)},
          {"workers", workers},
          {"steps_completed", steps_completed},
          {"loss", loss},
          {"module_loss", module_loss},
          {"peak_activation_elements", peak_activation_elements},
          {"predicted_peak_elements", predicted_peak_elements},
          {"validation", val},
          {"inversion_fallbacks", inversion_fallbacks}};
}

nlohmann::json TrainReport::timing_json() const {
  const double per = steps_completed ? total_seconds / steps_completed : 0.0;
  return {{"merged", timing_merged},
          {"forward_seconds", forward_seconds},
          {"backward_seconds", backward_seconds},
          {"total_seconds", total_seconds},
          {"seconds_per_iteration", per}};
}

Var loss_complex_l1(Tape& tape, const Var& pred, const Var& target) {
  return ad::l1_complex(tape, pred, target);
}

std::vector<std::size_t> batch_indices(std::uint64_t seed, int step, int batch, std::size_t n) {
  if (n == 0) throw ConfigError("training set is empty");
  std::vector<std::size_t> out;
  std::uint64_t cached_epoch = ~std::uint64_t{0};
  std::vector<std::size_t> perm(n);
  for (int j = 0; j < batch; ++j) {
    const std::uint64_t g = static_cast<std::uint64_t>(step) * batch + j;
    const std::uint64_t epoch = g / n;
    if (epoch != cached_epoch) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
      std::mt19937_64 rng(seq);
      for (std::size_t i = 0; i < n; ++i) perm[i] = i;
      for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(perm[i - 1], perm[pick(rng)]);
      }
      cached_epoch = epoch;
    }
    out.push_back(perm[g % n]);
  }
  return out;
}

std::size_t predicted_peak(const NetworkSpec& net, const TrainConfig& cfg, std::size_t pixels) {
  const std::size_t p = pixels;
  const std::size_t loss = p;
  const int n = net.iterations;
  switch (cfg.strategy) {
    case Strategy::e2e_bp:
      return span_footprint(net, p, 0, n) + loss;
    case Strategy::checkpointing: {
      const auto segs = segments(n, cfg.resolved_checkpoints(net));
      std::size_t peak = segs.size() * p + loss;
      for (std::size_t k = 0; k < segs.size(); ++k) {
        // Stored inputs of segments 1..k plus the recomputed segment; the
        // first segment's input is a constant.
        std::size_t seg = 0;
        for (int i = segs[k].first; i < segs[k].second; ++i) {
          seg += iteration_footprint(net, p, i > 0);
        }
        peak = std::max(peak, (k + 1) * p + seg);
      }
      return peak;
    }
    case Strategy::mel: {
      const std::size_t stored = (1 + static_cast<std::size_t>(cfg.resolved_checkpoints(net))) * p;
      std::size_t widest = loss;
      for (int i = 0; i < n; ++i) widest = std::max(widest, iteration_footprint(net, p, i > 0));
      return stored + widest;
    }
    case Strategy::gleam: {
      const int k = net.iterations_per_module();
      std::size_t total = 0;
      for (int d = 0; d < cfg.workers; ++d) {
        std::size_t worker = 0;
        for (int m = d; m < net.modules; m += cfg.workers) {
          worker = std::max(worker, span_footprint(net, p, m * k, (m + 1) * k) + loss);
        }
        total += worker;
      }
      return total;
    }
  }
  return 0;
}

Trainer::Trainer(UnrolledNetwork& net, std::span<const Sample> data, TrainConfig cfg)
    : net_(net), data_(data), cfg_(std::move(cfg)), meter_(std::make_shared<ActivationMeter>()) {
  cfg_.validate(net_.spec());
  if (data_.empty()) throw ConfigError("training set is empty");
  for (int m = 0; m < net_.modules(); ++m) optimizers_.emplace_back(cfg_.adam);
  for (int d = 0; d < cfg_.workers; ++d) {
    worker_meters_.push_back(std::make_shared<ActivationMeter>());
  }
  report_.strategy = cfg_.strategy;
  report_.workers = cfg_.workers;
  report_.timing_merged = cfg_.workers > 1;
  report_.predicted_peak_elements =
      predicted_peak(net_.spec(), cfg_, data_.front().target.numel());
}

double Trainer::module_lr(int module) const {
  return cfg_.module_lr.empty() ? cfg_.adam.lr
                                : cfg_.module_lr[static_cast<std::size_t>(module - 1)];
}

void Trainer::apply_updates(int module) {
  const auto params = net_.module_parameters(module);
  optimizers_[static_cast<std::size_t>(module - 1)].step(params, module_lr(module));
  const ModuleRange r = net_.module_range(module);
  for (int i = r.first; i < r.last; ++i) net_.block(i).enforce_contractivity();
}

void Trainer::abort(const std::string& why) { throw TrainingAborted(why, report_); }

void Trainer::run(int steps) {
  const auto t0 = Clock::now();
  for (int s = 0; s < steps && step_ < cfg_.total_iterations; ++s) {
    const auto batch = batch_indices(cfg_.seed, step_, cfg_.batch_size, data_.size());
    try {
      switch (cfg_.strategy) {
        case Strategy::e2e_bp: step_e2e(batch, false); break;
        case Strategy::checkpointing: step_e2e(batch, true); break;
        case Strategy::mel: step_mel(batch); break;
        case Strategy::gleam:
          if (cfg_.workers > 1) {
            step_gleam_parallel(batch);
          } else {
            step_gleam(batch);
          }
          break;
      }
    } catch (const TrainingAborted&) {
      throw;
    } catch (const NumericError& e) {
      abort("step " + std::to_string(step_) + ": " + e.what());
    }
    ++step_;
    report_.steps_completed = step_;
    if (cfg_.workers > 1) {
      std::size_t sum = 0;
      for (const auto& m : worker_meters_) sum += m->peak();
      report_.peak_activation_elements = sum;
    } else {
      report_.peak_activation_elements = meter_->peak();
    }
    if (validator && validate_every > 0 && step_ % validate_every == 0) {
      report_.validation.emplace_back(step_, validator(net_));
    }
  }
  report_.total_seconds += seconds_since(t0);
}

void Trainer::step_e2e(const std::vector<std::size_t>& batch, bool checkpointed) {
  const int n = net_.iterations();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  net_.zero_grad();
  double total = 0.0;
  const auto segs = segments(n, cfg_.resolved_checkpoints(net_.spec()));
  for (std::size_t idx : batch) {
    const Sample& s = data_[idx];
    const SensingModel& model = *s.model;
    const ComplexTensor& y = s.kspace;
    Tape tape(meter_);
    auto t0 = Clock::now();
    Var h = Var::constant(adjoint_A(model, y));
    if (!checkpointed) {
      h = forward_range(tape, net_, 0, n, h, model, y);
    } else {
      for (const auto& [first, last] : segs) {
        SegmentFn fn = [this, &model, &y, first = first, last = last](
                           Tape& t, std::span<const Var> in) {
          return forward_range(t, net_, first, last, in[0], model, y);
        };
        std::array<Var, 1> in{h};
        h = checkpoint_segment(tape, fn, in);
      }
    }
    Var loss = ad::scale(tape, loss_complex_l1(tape, h, Var::constant(s.target)), inv_b);
    const double value = loss.value().item().real() / inv_b;
    require_finite(value, "loss");
    total += value;
    auto t1 = Clock::now();
    report_.forward_seconds += std::chrono::duration<double>(t1 - t0).count();
    tape.backward(loss);
    report_.backward_seconds += seconds_since(t1);
  }
  for (int m = 1; m <= net_.modules(); ++m) apply_updates(m);
  report_.loss.push_back(total * inv_b);
}

void Trainer::step_mel(const std::vector<std::size_t>& batch) {
  const int n = net_.iterations();
  const int ncp = cfg_.resolved_checkpoints(net_.spec());
  const auto positions = mel_positions(n, ncp);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  net_.zero_grad();
  double total = 0.0;
  for (std::size_t idx : batch) {
    const Sample& s = data_[idx];
    const SensingModel& model = *s.model;
    const ComplexTensor& y = s.kspace;
    const ComplexTensor ahy = adjoint_A(model, y);
    const std::size_t p = ahy.numel();

    auto t0 = Clock::now();
    Tape nr(meter_, /*recording=*/false);
    std::map<int, ComplexTensor> stored;
    ComplexTensor x = ahy;
    for (int i = 0; i < n; ++i) {
      x = forward_iteration(nr, net_, i, Var::constant(x), model, y, ahy).value();
      if (std::find(positions.begin(), positions.end(), i + 1) != positions.end()) stored[i + 1] = x;
    }
    MeterHold hold(*meter_, (1 + static_cast<std::size_t>(ncp)) * p);

    ComplexTensor grad;
    {
      Tape lt(meter_);
      Var xn = lt.leaf(x);
      Var loss = ad::scale(lt, loss_complex_l1(lt, xn, Var::constant(s.target)), inv_b);
      const double value = loss.value().item().real() / inv_b;
      require_finite(value, "loss");
      total += value;
      auto t1 = Clock::now();
      report_.forward_seconds += std::chrono::duration<double>(t1 - t0).count();
      lt.backward(loss);
      grad = lt.grad(xn);
    }

    auto t2 = Clock::now();
    ComplexTensor cur = std::move(x);
    for (int k = n; k >= 1; --k) {
      const int prev_pos = k - 1;
      ComplexTensor prev;
      if (prev_pos == 0) {
        prev = ahy;
      } else if (auto it = stored.find(prev_pos); it != stored.end()) {
        prev = it->second;
      } else {
        try {
          const ComplexTensor z = net_.block(k - 1).invert(cur);
          prev = cg_inverse(model, z, ahy);
        } catch (const InversionError& e) {
          if (ncp == 0) {
            throw NumericError(std::string("inversion failed at iteration ") +
                               std::to_string(k) + " (" + e.what() +
                               "); increase the checkpoint count N_cp");
          }
          int base = 0;
          for (int pos : positions) {
            if (pos < prev_pos) base = std::max(base, pos);
          }
          prev = base == 0 ? ahy : stored.at(base);
          for (int i = base; i < prev_pos; ++i) {
            prev = forward_iteration(nr, net_, i, Var::constant(prev), model, y, ahy).value();
          }
          ++report_.inversion_fallbacks;
        }
      }
      Tape rt(meter_);
      Var in = prev_pos == 0 ? Var::constant(prev) : rt.leaf(prev);
      Var out = forward_iteration(rt, net_, k - 1, in, model, y, ahy);
      rt.backward(out, grad);
      if (prev_pos > 0) grad = rt.grad(in);
      cur = std::move(prev);
    }
    report_.backward_seconds += seconds_since(t2);
  }
  for (int m = 1; m <= net_.modules(); ++m) apply_updates(m);
  report_.loss.push_back(total * inv_b);
}

void Trainer::step_gleam(const std::vector<std::size_t>& batch) {
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<ComplexTensor> xs;
  for (std::size_t idx : batch) xs.push_back(adjoint_A(*data_[idx].model, data_[idx].kspace));
  std::vector<double> losses;
  for (int m = 1; m <= net_.modules(); ++m) {
    for (auto* p : net_.module_parameters(m)) p->zero_grad();
    double total = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const Sample& s = data_[batch[b]];
      Tape tape(meter_);
      auto t0 = Clock::now();
      Var out = forward_module(tape, net_, m, Var::constant(xs[b]), *s.model, s.kspace);
      Var loss = ad::scale(tape, loss_complex_l1(tape, out, Var::constant(s.target)), inv_b);
      const double value = loss.value().item().real() / inv_b;
      require_finite(value, "loss");
      total += value;
      auto t1 = Clock::now();
      report_.forward_seconds += std::chrono::duration<double>(t1 - t0).count();
      tape.backward(loss);
      report_.backward_seconds += seconds_since(t1);
      // Detach: the next module sees this value as a constant.
      xs[b] = out.value();
    }
    apply_updates(m);
    losses.push_back(total * inv_b);
  }
  report_.loss.push_back(losses.back());
  report_.module_loss.push_back(std::move(losses));
}

void Trainer::step_gleam_parallel(const std::vector<std::size_t>& batch) {
  const int modules = net_.modules();
  const int workers = cfg_.workers;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  // boxes[m] carries the detached outputs of module m (m = 0: x0).
  std::deque<Mailbox> boxes(static_cast<std::size_t>(modules) + 1);
  for (auto& box : boxes) box.slots.resize(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    boxes[0].slots[b] = adjoint_A(*data_[batch[b]].model, data_[batch[b]].kspace);
  }
  std::vector<double> losses(static_cast<std::size_t>(modules), 0.0);
  std::atomic<bool> failed{false};
  std::mutex error_mu;
  std::exception_ptr error;

  auto fail_all = [&](std::exception_ptr e) {
    {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!error) error = e;
    }
    failed = true;
    for (auto& box : boxes) {
      std::lock_guard<std::mutex> lock(box.mu);
      box.cv.notify_all();
    }
  };

  auto worker = [&](int d) {
    try {
      auto meter = worker_meters_[static_cast<std::size_t>(d)];
      for (int m = d + 1; m <= modules; m += workers) {
        for (auto* p : net_.module_parameters(m)) p->zero_grad();
        double total = 0.0;
        Mailbox& in_box = boxes[static_cast<std::size_t>(m - 1)];
        Mailbox& out_box = boxes[static_cast<std::size_t>(m)];
        for (std::size_t b = 0; b < batch.size(); ++b) {
          ComplexTensor x_in;
          {
            std::unique_lock<std::mutex> lock(in_box.mu);
            in_box.cv.wait(lock, [&] { return failed.load() || in_box.slots[b].has_value(); });
            if (failed) return;
            x_in = *in_box.slots[b];
          }
          const Sample& s = data_[batch[b]];
          Tape tape(meter);
          Var out = forward_module(tape, net_, m, Var::constant(std::move(x_in)), *s.model,
                                   s.kspace);
          {
            std::lock_guard<std::mutex> lock(out_box.mu);
            out_box.slots[b] = out.value();
            out_box.cv.notify_all();
          }
          Var loss = ad::scale(tape, loss_complex_l1(tape, out, Var::constant(s.target)), inv_b);
          const double value = loss.value().item().real() / inv_b;
          require_finite(value, "loss");
          total += value;
          tape.backward(loss);
        }
        apply_updates(m);
        losses[static_cast<std::size_t>(m - 1)] = total * inv_b;
      }
    } catch (...) {
      fail_all(std::current_exception());
    }
  };

  std::vector<std::thread> threads;
  for (int d = 0; d < workers; ++d) threads.emplace_back(worker, d);
  for (auto& t : threads) t.join();
  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const std::exception& e) {
      abort("step " + std::to_string(step_) + ": worker failure: " + e.what());
    }
  }
  report_.loss.push_back(losses.back());
  report_.module_loss.push_back(std::move(losses));
}

Container Trainer::state() const {
  Container c = snapshot_container(net_);
  c.meta["train"] = {{"step", step_}, {"config", to_json(cfg_)}, {"report", report_.to_json()}};
  for (int m = 1; m <= net_.modules(); ++m) {
    for (const auto& [name, slot] : optimizers_[static_cast<std::size_t>(m - 1)].slots()) {
      c.entries.push_back({"adam.m/" + name, slot.m, natural_dtype(slot.m),
                           {{"module", m}, {"t", slot.t}}});
      c.entries.push_back({"adam.v/" + name, slot.v, natural_dtype(slot.v),
                           {{"module", m}, {"t", slot.t}}});
    }
  }
  return c;
}

void Trainer::restore(const Container& c) {
  load_parameters(net_, c);
  if (!c.meta.contains("train")) throw ConfigError("container holds no training state");
  const auto& t = c.meta.at("train");
  step_ = t.at("step").get<int>();
  for (int m = 1; m <= net_.modules(); ++m) {
    auto& slots = optimizers_[static_cast<std::size_t>(m - 1)].slots();
    slots.clear();
    for (auto* p : net_.module_parameters(m)) {
      const ContainerEntry* em = c.find("adam.m/" + p->name);
      const ContainerEntry* ev = c.find("adam.v/" + p->name);
      if (!em || !ev) continue;
      slots[p->name] = {em->tensor, ev->tensor, em->attrs.at("t").get<long>()};
    }
  }
  const auto& r = t.at("report");
  report_.steps_completed = step_;
  report_.loss = r.at("loss").get<std::vector<double>>();
  report_.module_loss = r.at("module_loss").get<std::vector<std::vector<double>>>();
  report_.inversion_fallbacks = r.at("inversion_fallbacks").get<int>();
  report_.validation.clear();
  for (const auto& v : r.at("validation")) {
    report_.validation.emplace_back(v.at(0).get<int>(), v.at(1).get<double>());
  }
}

namespace {

TrainReport run_strategy(UnrolledNetwork& net, std::span<const Sample> data, TrainConfig cfg,
                         Strategy s) {
  cfg.strategy = s;
  Trainer t(net, data, std::move(cfg));
  t.run_all();
  return t.report();
}

}  // namespace

TrainReport train_e2e(UnrolledNetwork& net, std::span<const Sample> data, TrainConfig cfg) {
  return run_strategy(net, data, std::move(cfg), Strategy::e2e_bp);
}

TrainReport train_checkpointed(UnrolledNetwork& net, std::span<const Sample> data,
                               TrainConfig cfg) {
  return run_strategy(net, data, std::move(cfg), Strategy::checkpointing);
}

TrainReport train_mel(UnrolledNetwork& net, std::span<const Sample> data, TrainConfig cfg) {
  return run_strategy(net, data, std::move(cfg), Strategy::mel);
}

TrainReport train_gleam(UnrolledNetwork& net, std::span<const Sample> data, TrainConfig cfg) {
  cfg.workers = 1;
  return run_strategy(net, data, std::move(cfg), Strategy::gleam);
}

TrainReport train_gleam_parallel(UnrolledNetwork& net, std::span<const Sample> data,
                                 TrainConfig cfg) {
  return run_strategy(net, data, std::move(cfg), Strategy::gleam);
}

}  // namespace mriunroll
