// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "mriunroll/autodiff.hpp"

namespace mriunroll {

/// Layout of the learned proximal CNN. Both layouts are sequences of
/// residual units x -> x + g(x) acting on the two-channel real view of a
/// complex image; convolutions carry no bias.
///
///   residual: `res_blocks` units, g = conv(relu(conv(relu(x)))), 2->F->2
///   skip5:    one unit, g = five convs 2->F->F->F->F->2 with ReLU between
enum class CnnKind { residual, skip5 };

std::string to_string(CnnKind kind);
CnnKind cnn_kind_from_string(const std::string& s);

struct CnnSpec {
  CnnKind kind = CnnKind::residual;
  int features = 8;
  int kernel = 3;
  int res_blocks = 2;
  // Invertible blocks keep every unit's Lipschitz bound at or below
  // `lipschitz_target` and can be inverted by fixed-point iteration.
  bool invertible = false;
  double lipschitz_target = 0.9;
  int inversion_max_iterations = 100;
  double inversion_tolerance = 1e-10;

  void validate() const;
};

nlohmann::json to_json(const CnnSpec& spec);
CnnSpec cnn_spec_from_json(const nlohmann::json& j);

struct InversionStats {
  int iterations = 0;
  double last_step = 0.0;
};

class ProximalBlock {
 public:
  // Weights ~ N(0, 0.02^2); the last conv of every unit starts at zero so the
  // block is initially the identity.
  ProximalBlock(const CnnSpec& spec, std::mt19937_64& rng, const std::string& name);

  const CnnSpec& spec() const { return spec_; }
  std::size_t units() const { return units_.size(); }
  // Convolution weights of unit u, shape (Cout, Cin, K, K).
  std::vector<Parameter>& unit(std::size_t u) { return units_.at(u); }
  const std::vector<Parameter>& unit(std::size_t u) const { return units_.at(u); }
  std::vector<Parameter*> parameters();

  // Complex (H, W) -> (H, W).
  Var apply(Tape& tape, const Var& x);
  ComplexTensor apply_values(const ComplexTensor& x);
  // g of unit u on the two-channel view (1, 2, H, W), without recording.
  ComplexTensor unit_residual_values(std::size_t u, const ComplexTensor& channels);

  // Upper bound on Lip(g_u): prod over layers of sum over taps of the
  // Frobenius norm of the (Cout, Cin) tap matrix.
  double lipschitz_bound(std::size_t u) const;
  // Rescales each unit whose bound exceeds the target by a common per-layer
  // factor. No-op for non-invertible blocks.
  void enforce_contractivity();

  // Fixed-point inversion x <- y - g(x), unit by unit in reverse order.
  // Throws InversionError when a unit fails to reach the tolerance in the
  // iteration budget, ContractError for non-invertible blocks.
  ComplexTensor invert(const ComplexTensor& y, InversionStats* stats = nullptr);

  static std::size_t parameter_count(const CnnSpec& spec);
  // Activation elements one application saves on the meter for an (H, W)
  // image when its parameters require grad.
  static std::size_t activation_footprint(const CnnSpec& spec, std::size_t pixels,
                                          bool input_requires_grad);

 private:
  Var unit_residual(Tape& tape, std::size_t u, const Var& channels);

  CnnSpec spec_;
  std::vector<std::vector<Parameter>> units_;
};

}  // namespace mriunroll
