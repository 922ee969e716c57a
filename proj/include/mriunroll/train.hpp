// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mriunroll/container.hpp"
#include "mriunroll/errors.hpp"
#include "mriunroll/network.hpp"

namespace mriunroll {

/// Fully sampled reference, its measured k-space, and the model that
/// produced the measurement.
struct Sample {
  ComplexTensor target;
  ComplexTensor kspace;
  std::shared_ptr<const SensingModel> model;
};

enum class Strategy { e2e_bp, checkpointing, mel, gleam };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction on the real-pair view of each parameter. State
/// is keyed by parameter name.
class Adam {
 public:
  struct Slot {
    ComplexTensor m;
    ComplexTensor v;
    long t = 0;
  };

  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Applies one update from each parameter's grad; `lr` overrides cfg.lr
  // when positive.
  void step(std::span<Parameter* const> params, double lr = -1.0);

  const AdamConfig& config() const { return cfg_; }
  const std::map<std::string, Slot>& slots() const { return slots_; }
  std::map<std::string, Slot>& slots() { return slots_; }

 private:
  AdamConfig cfg_;
  std::map<std::string, Slot> slots_;
};

struct TrainConfig {
  Strategy strategy = Strategy::e2e_bp;
  // P-GLEAM workers; gleam only. Must divide the module count when > 1.
  int workers = 1;
  int batch_size = 1;
  int total_iterations = 100;
  AdamConfig adam;
  // Stored checkpoints. -1 picks the default: N for checkpointing, 0 for mel.
  int checkpoints = -1;
  // Optional per-module learning rates (gleam); empty means adam.lr.
  std::vector<double> module_lr;
  std::uint64_t seed = 0;

  void validate(const NetworkSpec& net) const;
  int resolved_checkpoints(const NetworkSpec& net) const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct TrainReport {
  Strategy strategy = Strategy::e2e_bp;
  int workers = 1;
  int steps_completed = 0;
  // Mean batch loss per step (final module's loss for gleam).
  std::vector<double> loss;
  // gleam: [step][module] local losses.
  std::vector<std::vector<double>> module_loss;
  std::size_t peak_activation_elements = 0;
  std::size_t predicted_peak_elements = 0;
  // (step, value) pairs from the validation callback.
  std::vector<std::pair<int, double>> validation;
  int inversion_fallbacks = 0;

  // Wall-clock seconds; forward/backward are zero when merged.
  double forward_seconds = 0.0;
  double backward_seconds = 0.0;
  double total_seconds = 0.0;
  bool timing_merged = false;

  // Deterministic part only (no timings).
  nlohmann::json to_json() const;
  nlohmann::json timing_json() const;
};

/// Training aborted (non-finite loss, failed inversion, worker failure).
/// Carries the report up to the failing step.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, TrainReport partial)
      : NumericError(what), partial_(std::move(partial)) {}
  const TrainReport& partial() const { return partial_; }

 private:
  TrainReport partial_;
};

// Mean |pred - target| over complex entries.
Var loss_complex_l1(Tape& tape, const Var& pred, const Var& target);

// Sample indices for a step: epoch-wise permutations seeded by (seed,
// epoch), so any step's batch is reproducible without replaying earlier ones.
std::vector<std::size_t> batch_indices(std::uint64_t seed, int step, int batch, std::size_t n);

// Peak activation elements each strategy should hit for (H, W) images.
std::size_t predicted_peak(const NetworkSpec& net, const TrainConfig& cfg, std::size_t pixels);

class Trainer {
 public:
  Trainer(UnrolledNetwork& net, std::span<const Sample> data, TrainConfig cfg);

  // Runs until `steps` more steps are done or total_iterations is reached.
  void run(int steps);
  void run_all() { run(cfg_.total_iterations); }

  int step() const { return step_; }
  const TrainReport& report() const { return report_; }
  const TrainConfig& config() const { return cfg_; }

  // Network snapshot plus optimizer state and step counter.
  Container state() const;
  void restore(const Container& c);

  std::function<double(UnrolledNetwork&)> validator;
  int validate_every = 0;

 private:
  void step_e2e(const std::vector<std::size_t>& batch, bool checkpointed);
  void step_mel(const std::vector<std::size_t>& batch);
  void step_gleam(const std::vector<std::size_t>& batch);
  void step_gleam_parallel(const std::vector<std::size_t>& batch);
  void apply_updates(int module);
  double module_lr(int module) const;
  [[noreturn]] void abort(const std::string& why);

  UnrolledNetwork& net_;
  std::span<const Sample> data_;
  TrainConfig cfg_;
  std::vector<Adam> optimizers_;  // one per module
  std::shared_ptr<ActivationMeter> meter_;
  std::vector<std::shared_ptr<ActivationMeter>> worker_meters_;
  TrainReport report_;
  int step_ = 0;
};

TrainReport train_e2e(UnrolledNetwork& net, std::span<const Sample> data, TrainConfig cfg);
TrainReport train_checkpointed(UnrolledNetwork& net, std::span<const Sample> data,
                               TrainConfig cfg);
TrainReport train_mel(UnrolledNetwork& net, std::span<const Sample> data, TrainConfig cfg);
TrainReport train_gleam(UnrolledNetwork& net, std::span<const Sample> data, TrainConfig cfg);
TrainReport train_gleam_parallel(UnrolledNetwork& net, std::span<const Sample> data,
                                 TrainConfig cfg);

}  // namespace mriunroll
