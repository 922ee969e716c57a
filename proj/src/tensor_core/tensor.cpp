// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "mriunroll/errors.hpp"

namespace mriunroll {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

ComplexTensor::ComplexTensor(Shape shape)
    : shape_(std::move(shape)), data_(shape_numel(shape_), cdouble{0.0, 0.0}) {}

ComplexTensor::ComplexTensor(Shape shape, std::vector<cdouble> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_)) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_to_string(shape_));
  }
}

ComplexTensor ComplexTensor::full(Shape shape, cdouble value) {
  ComplexTensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

ComplexTensor ComplexTensor::randn(Shape shape, std::mt19937_64& rng, double stddev,
                                   bool real_only) {
  ComplexTensor t(std::move(shape));
  std::normal_distribution<double> normal(0.0, stddev);
  for (auto& v : t.data_) {
    const double re = normal(rng);
    const double im = real_only ? 0.0 : normal(rng);
    v = {re, im};
  }
  return t;
}

cdouble ComplexTensor::item() const {
  if (data_.size() != 1) {
    throw DimensionError("item() on tensor of shape " + shape_to_string(shape_));
  }
  return data_[0];
}

ComplexTensor ComplexTensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel()) {
    throw DimensionError("cannot reshape " + shape_to_string(shape_) + " to " +
                         shape_to_string(shape));
  }
  return ComplexTensor(std::move(shape), data_);
}

ComplexTensor& ComplexTensor::operator+=(const ComplexTensor& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

ComplexTensor& ComplexTensor::operator-=(const ComplexTensor& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

ComplexTensor& ComplexTensor::operator*=(cdouble s) {
  for (auto& v : data_) v *= s;
  return *this;
}

bool ComplexTensor::identical(const ComplexTensor& other) const {
  if (shape_ != other.shape_) return false;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i].real() != other.data_[i].real() || data_[i].imag() != other.data_[i].imag()) {
      return false;
    }
  }
  return true;
}

bool ComplexTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](const cdouble& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

ComplexTensor operator+(ComplexTensor a, const ComplexTensor& b) { return a += b; }
ComplexTensor operator-(ComplexTensor a, const ComplexTensor& b) { return a -= b; }
ComplexTensor operator*(cdouble s, ComplexTensor a) { return a *= s; }

cdouble inner(const ComplexTensor& a, const ComplexTensor& b) {
  require_same_shape(a, b, "inner");
  cdouble acc{0.0, 0.0};
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::conj(x[i]) * y[i];
  return acc;
}

double norm2(const ComplexTensor& a) {
  double acc = 0.0;
  for (const auto& v : a.data()) acc += std::norm(v);
  return std::sqrt(acc);
}

double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double relative_error(const ComplexTensor& a, const ComplexTensor& b) {
  return norm2(a - b) / std::max(norm2(b), 1e-300);
}

ComplexTensor abs(const ComplexTensor& a) {
  ComplexTensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = std::abs(a[i]);
  return out;
}

ComplexTensor real_part(const ComplexTensor& a) {
  ComplexTensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i].real();
  return out;
}

ComplexTensor conj(const ComplexTensor& a) {
  ComplexTensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = std::conj(a[i]);
  return out;
}

ComplexTensor hadamard(const ComplexTensor& a, const ComplexTensor& b) {
  require_same_shape(a, b, "hadamard");
  ComplexTensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
  return out;
}

void require_same_shape(const ComplexTensor& a, const ComplexTensor& b, const char* context) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(context) + ": shape mismatch " +
                         shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
}

}  // namespace mriunroll
