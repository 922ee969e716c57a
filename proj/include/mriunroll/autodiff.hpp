// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mriunroll/tensor.hpp"

namespace mriunroll {

/// Trainable tensor. CNN weights are real (zero imaginary part and the ops
/// that consume them only read real parts), so their gradients stay real.
struct Parameter {
  Parameter(std::string name, ComplexTensor value);

  std::string name;
  ComplexTensor value;
  ComplexTensor grad;
  std::uint64_t id;

  void zero_grad();
};

/// Running count of tensor elements held for backward rules. One meter may be
/// shared by a tape and the scratch tapes it spawns during recomputation.
class ActivationMeter {
 public:
  void acquire(std::size_t elements);
  void release(std::size_t elements);
  std::size_t live() const { return live_; }
  std::size_t peak() const { return peak_; }
  void reset_peak() { peak_ = live_; }

 private:
  std::size_t live_ = 0;
  std::size_t peak_ = 0;
};

class Tape;

/// Value handle. A Var either belongs to a tape node (and can receive
/// gradients) or is a constant.
class Var {
 public:
  Var() = default;
  static Var constant(ComplexTensor value);

  const ComplexTensor& value() const { return *value_; }
  const Shape& shape() const { return value_->shape(); }
  std::size_t numel() const { return value_->numel(); }
  bool requires_grad() const { return tape_ != nullptr; }
  bool is_parameter() const { return parameter_; }
  const Tape* tape() const { return tape_; }
  int node() const { return node_; }
  bool valid() const { return value_ != nullptr; }

 private:
  friend class Tape;
  std::shared_ptr<const ComplexTensor> value_;
  Tape* tape_ = nullptr;
  int node_ = -1;
  bool parameter_ = false;
};

/// Maps the gradient of a node's output to gradients of its inputs, one entry
/// per input; an empty tensor means "no gradient".
using BackwardFn = std::function<std::vector<ComplexTensor>(const ComplexTensor& grad_out)>;

/// Define-by-run reverse-mode tape.
///
/// Gradient convention: for a real loss L of complex z = a + ib the stored
/// gradient is dL/da + i dL/db, so `z -= lr * grad` is a descent step. For a
/// C-linear map w = K z this gives grad_z = K^H grad_w.
///
/// Every node declares how many tensor elements its backward rule keeps
/// alive. They are added to the meter when recorded and released once the
/// node's backward has run (or the tape is released).
class Tape {
 public:
  explicit Tape(std::shared_ptr<ActivationMeter> meter = std::make_shared<ActivationMeter>(),
                bool recording = true);
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  ActivationMeter& meter() { return *meter_; }
  const ActivationMeter& meter() const { return *meter_; }
  const std::shared_ptr<ActivationMeter>& shared_meter() const { return meter_; }

  // Differentiable input; its gradient is available through grad() after
  // backward. On a non-recording tape this is a constant.
  Var leaf(ComplexTensor value);
  // Parameter leaf; backward accumulates into p.grad.
  Var param(Parameter& p);

  // Appends a node. Unless `force` is set, a node whose inputs are all
  // constants (or a non-recording tape) yields a constant and records nothing.
  // `force` is for opaque nodes holding parameters internally.
  Var record(std::string_view op, ComplexTensor output, std::span<const Var> inputs,
             BackwardFn backward, std::size_t saved_elements, bool force = false);

  // Root must hold exactly one element; the loss is its real part.
  void backward(const Var& root);
  // Seeds the root with an arbitrary gradient of the root's shape.
  void backward(const Var& root, const ComplexTensor& seed);

  const ComplexTensor& grad(const Var& leaf) const;
  bool has_grad(const Var& leaf) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t pending_saved_elements() const;
  // Drops every node and its saved tensors without running backward.
  void release();

 private:
  struct Node {
    std::string_view op;
    std::vector<int> inputs;
    BackwardFn backward;
    std::size_t saved = 0;
    Parameter* parameter = nullptr;
    bool leaf = false;
    bool released = false;
  };

  Var make_var(std::shared_ptr<const ComplexTensor> value, int node, bool parameter);
  void release_node(Node& node);

  std::shared_ptr<ActivationMeter> meter_;
  bool recording_;
  std::vector<Node> nodes_;
  std::unordered_map<int, ComplexTensor> leaf_grads_;
  bool consumed_ = false;
};

// FNV-1a over the bit patterns of shape and values.
std::uint64_t fingerprint(const ComplexTensor& t);

}  // namespace mriunroll
