// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mriunroll {

using cdouble = std::complex<double>;
using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major complex tensor. Real-valued quantities (CNN channels,
/// weights, masks) are stored with a zero imaginary part.
class ComplexTensor {
 public:
  ComplexTensor() = default;
  explicit ComplexTensor(Shape shape);
  ComplexTensor(Shape shape, std::vector<cdouble> data);

  static ComplexTensor zeros(Shape shape) { return ComplexTensor(std::move(shape)); }
  static ComplexTensor full(Shape shape, cdouble value);
  static ComplexTensor ones(Shape shape) { return full(std::move(shape), 1.0); }
  static ComplexTensor scalar(cdouble value) { return full({}, value); }
  // Independent standard normal real and imaginary parts scaled by `stddev`.
  static ComplexTensor randn(Shape shape, std::mt19937_64& rng, double stddev = 1.0,
                             bool real_only = false);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return shape_.empty() && data_.empty(); }

  std::span<cdouble> data() { return data_; }
  std::span<const cdouble> data() const { return data_; }
  cdouble& operator[](std::size_t i) { return data_[i]; }
  const cdouble& operator[](std::size_t i) const { return data_[i]; }

  // Scalar value of a single-element tensor.
  cdouble item() const;

  ComplexTensor reshaped(Shape shape) const;

  ComplexTensor& operator+=(const ComplexTensor& other);
  ComplexTensor& operator-=(const ComplexTensor& other);
  ComplexTensor& operator*=(cdouble s);

  bool same_shape(const ComplexTensor& other) const { return shape_ == other.shape_; }
  // Bitwise equality of shape and values.
  bool identical(const ComplexTensor& other) const;
  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<cdouble> data_;
};

ComplexTensor operator+(ComplexTensor a, const ComplexTensor& b);
ComplexTensor operator-(ComplexTensor a, const ComplexTensor& b);
ComplexTensor operator*(cdouble s, ComplexTensor a);

// <a, b> = sum conj(a_i) b_i
cdouble inner(const ComplexTensor& a, const ComplexTensor& b);
double norm2(const ComplexTensor& a);
double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b);
// ||a - b|| / max(||b||, tiny)
double relative_error(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor abs(const ComplexTensor& a);
ComplexTensor real_part(const ComplexTensor& a);
ComplexTensor conj(const ComplexTensor& a);
ComplexTensor hadamard(const ComplexTensor& a, const ComplexTensor& b);

// Throws DimensionError naming `context` when shapes differ.
void require_same_shape(const ComplexTensor& a, const ComplexTensor& b, const char* context);

}  // namespace mriunroll
