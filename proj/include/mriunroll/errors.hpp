// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mriunroll {

// Shape or extent mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Extents the transform code cannot handle (non power of two, too coarse for
// the requested number of wavelet levels).
class UnsupportedSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An API precondition was violated by the caller.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid configuration: divisibility rules, strategy/network mismatch,
// missing seeds, out-of-range parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numeric failure during training or reconstruction (non-finite loss).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fixed-point inversion of a residual block did not converge.
class InversionError : public NumericError {
 public:
  InversionError(const std::string& what, int iterations, double residual)
      : NumericError(what), iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

}  // namespace mriunroll
