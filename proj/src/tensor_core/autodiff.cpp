// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/autodiff.hpp"

#include <atomic>
#include <cstring>

#include "mriunroll/errors.hpp"

namespace mriunroll {
namespace {
std::atomic<std::uint64_t> next_parameter_id{1};
}  // namespace

Parameter::Parameter(std::string name_, ComplexTensor value_)
    : name(std::move(name_)),
      value(std::move(value_)),
      grad(ComplexTensor::zeros(value.shape())),
      id(next_parameter_id.fetch_add(1)) {}

void Parameter::zero_grad() { grad = ComplexTensor::zeros(value.shape()); }

void ActivationMeter::acquire(std::size_t elements) {
  live_ += elements;
  if (live_ > peak_) peak_ = live_;
}

void ActivationMeter::release(std::size_t elements) {
  if (elements > live_) throw ContractError("activation meter released more than it holds");
  live_ -= elements;
}

Var Var::constant(ComplexTensor value) {
  Var v;
  v.value_ = std::make_shared<const ComplexTensor>(std::move(value));
  return v;
}

Tape::Tape(std::shared_ptr<ActivationMeter> meter, bool recording)
    : meter_(std::move(meter)), recording_(recording) {
  if (!meter_) throw ContractError("tape requires an activation meter");
}

Tape::~Tape() { release(); }

Var Tape::make_var(std::shared_ptr<const ComplexTensor> value, int node, bool parameter) {
  Var v;
  v.value_ = std::move(value);
  v.tape_ = this;
  v.node_ = node;
  v.parameter_ = parameter;
  return v;
}

Var Tape::leaf(ComplexTensor value) {
  auto shared = std::make_shared<const ComplexTensor>(std::move(value));
  if (!recording_) {
    Var v;
    v.value_ = std::move(shared);
    return v;
  }
  Node node;
  node.op = "leaf";
  node.leaf = true;
  nodes_.push_back(std::move(node));
  return make_var(std::move(shared), static_cast<int>(nodes_.size()) - 1, false);
}

Var Tape::param(Parameter& p) {
  auto shared = std::make_shared<const ComplexTensor>(p.value);
  if (!recording_) {
    Var v;
    v.value_ = std::move(shared);
    return v;
  }
  Node node;
  node.op = "parameter";
  node.leaf = true;
  node.parameter = &p;
  nodes_.push_back(std::move(node));
  return make_var(std::move(shared), static_cast<int>(nodes_.size()) - 1, true);
}

Var Tape::record(std::string_view op, ComplexTensor output, std::span<const Var> inputs,
                 BackwardFn backward, std::size_t saved_elements, bool force) {
  if (consumed_) throw ContractError("recording on a tape after backward");
  bool any_grad = false;
  for (const auto& in : inputs) {
    if (!in.valid()) throw ContractError(std::string(op) + ": undefined input");
    if (in.tape_ != nullptr && in.tape_ != this) {
      throw ContractError(std::string(op) + ": input belongs to a different tape");
    }
    any_grad = any_grad || in.requires_grad();
  }
  if (!recording_ || !(any_grad || force)) return Var::constant(std::move(output));

  Node node;
  node.op = op;
  node.backward = std::move(backward);
  node.saved = saved_elements;
  node.inputs.reserve(inputs.size());
  for (const auto& in : inputs) node.inputs.push_back(in.node_);
  meter_->acquire(saved_elements);
  nodes_.push_back(std::move(node));
  return make_var(std::make_shared<const ComplexTensor>(std::move(output)),
                  static_cast<int>(nodes_.size()) - 1, false);
}

void Tape::release_node(Node& node) {
  if (node.released) return;
  node.released = true;
  node.backward = nullptr;
  meter_->release(node.saved);
}

void Tape::backward(const Var& root) {
  if (!root.valid() || root.numel() != 1) {
    throw ContractError("backward requires a scalar root, got shape " +
                        (root.valid() ? shape_to_string(root.shape()) : std::string("<none>")));
  }
  backward(root, ComplexTensor::full(root.shape(), 1.0));
}

void Tape::backward(const Var& root, const ComplexTensor& seed) {
  if (consumed_) throw ContractError("backward called twice on the same tape");
  if (root.tape_ != this) throw ContractError("backward root does not belong to this tape");
  require_same_shape(root.value(), seed, "backward seed");
  consumed_ = true;

  std::vector<ComplexTensor> grads(nodes_.size());
  std::vector<bool> has(nodes_.size(), false);
  grads[root.node_] = seed;
  has[root.node_] = true;

  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    Node& node = nodes_[i];
    if (!has[i]) {
      release_node(node);
      continue;
    }
    if (node.leaf) {
      if (node.parameter != nullptr) {
        Parameter& p = *node.parameter;
        if (p.grad.shape() != p.value.shape()) p.zero_grad();
        p.grad += grads[i];
      } else {
        leaf_grads_[i] = std::move(grads[i]);
      }
      grads[i] = ComplexTensor();
      release_node(node);
      continue;
    }
    std::vector<ComplexTensor> in_grads = node.backward(grads[i]);
    grads[i] = ComplexTensor();
    release_node(node);
    if (in_grads.size() != node.inputs.size()) {
      throw ContractError(std::string(node.op) + ": backward returned wrong gradient count");
    }
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const int src = node.inputs[k];
      if (src < 0 || in_grads[k].empty()) continue;
      if (!has[src]) {
        grads[src] = std::move(in_grads[k]);
        has[src] = true;
      } else {
        grads[src] += in_grads[k];
      }
    }
  }
}

const ComplexTensor& Tape::grad(const Var& leaf) const {
  auto it = leaf_grads_.find(leaf.node_);
  if (leaf.tape_ != this || it == leaf_grads_.end()) {
    throw ContractError("no gradient recorded for this leaf");
  }
  return it->second;
}

bool Tape::has_grad(const Var& leaf) const {
  return leaf.tape_ == this && leaf_grads_.count(leaf.node_) > 0;
}

std::size_t Tape::pending_saved_elements() const {
  std::size_t total = 0;
  for (const auto& n : nodes_) {
    if (!n.released) total += n.saved;
  }
  return total;
}

void Tape::release() {
  for (auto& n : nodes_) release_node(n);
}

std::uint64_t fingerprint(const ComplexTensor& t) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  for (auto e : t.shape()) mix(e);
  for (const auto& v : t.data()) {
    std::uint64_t re;
    std::uint64_t im;
    const double r = v.real();
    const double i = v.imag();
    std::memcpy(&re, &r, sizeof re);
    std::memcpy(&im, &i, sizeof im);
    mix(re);
    mix(im);
  }
  return h;
}

}  // namespace mriunroll
