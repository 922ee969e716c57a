// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>

#include "mriunroll/autodiff.hpp"

namespace mriunroll {

/// A segment must be a pure function of its inputs (and of parameters it
/// pulls onto the tape it is given).
using SegmentFn = std::function<Var(Tape&, std::span<const Var>)>;

/// Runs `fn` without recording and stores only the segment inputs (their
/// element count is charged to the meter). Backward re-runs `fn` on a scratch
/// tape sharing the meter, then backpropagates through it. A recomputation
/// that does not reproduce the forward output bit for bit raises
/// ContractError.
Var checkpoint_segment(Tape& tape, const SegmentFn& fn, std::span<const Var> inputs);

}  // namespace mriunroll
