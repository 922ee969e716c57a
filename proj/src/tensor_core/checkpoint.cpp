// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/checkpoint.hpp"

#include <vector>

#include "mriunroll/errors.hpp"

namespace mriunroll {

Var checkpoint_segment(Tape& tape, const SegmentFn& fn, std::span<const Var> inputs) {
  std::vector<ComplexTensor> stored;
  std::vector<bool> needs_grad;
  std::size_t saved = 0;
  stored.reserve(inputs.size());
  for (const auto& in : inputs) {
    stored.push_back(in.value());
    needs_grad.push_back(in.requires_grad());
    saved += in.numel();
  }

  ComplexTensor output;
  {
    Tape scratch(tape.shared_meter(), /*recording=*/false);
    std::vector<Var> constants;
    for (const auto& t : stored) constants.push_back(Var::constant(t));
    output = fn(scratch, constants).value();
  }
  if (!tape.recording()) return Var::constant(std::move(output));

  const std::uint64_t expected = fingerprint(output);
  auto meter = tape.shared_meter();
  BackwardFn backward = [fn, stored = std::move(stored), needs_grad, expected,
                         meter](const ComplexTensor& grad_out) {
    Tape scratch(meter);
    std::vector<Var> leaves;
    leaves.reserve(stored.size());
    for (std::size_t i = 0; i < stored.size(); ++i) {
      leaves.push_back(needs_grad[i] ? scratch.leaf(stored[i]) : Var::constant(stored[i]));
    }
    Var out = fn(scratch, leaves);
    if (fingerprint(out.value()) != expected) {
      throw ContractError("checkpoint segment is not a pure function of its inputs");
    }
    std::vector<ComplexTensor> grads(stored.size());
    if (!out.requires_grad()) return grads;
    scratch.backward(out, grad_out);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (needs_grad[i] && scratch.has_grad(leaves[i])) grads[i] = scratch.grad(leaves[i]);
    }
    return grads;
  };
  return tape.record("checkpoint", std::move(output), inputs, std::move(backward), saved,
                     /*force=*/true);
}

}  // namespace mriunroll
