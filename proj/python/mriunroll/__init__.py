# Copyright 2026 The mriunroll Authors.
# SPDX-License-Identifier: Apache-2.0
"""Unrolled MRI reconstruction networks and their training strategies."""

import json

from ._core import (
    ConfigError,
    DimensionError,
    NumericError,
    SensingModel,
    __version__,
    cs_reconstruct,
    load_split,
    make_coil_maps,
    make_mask,
    make_phantom,
    nrmse,
    psnr,
    reconstruct,
    ssim,
)
from . import _core


def generate(config):
    return json.loads(_core.cmd_generate(json.dumps(config)))


def train(config, resume=None, stop_after=None, run_name=""):
    return json.loads(_core.cmd_train(json.dumps(config), resume, stop_after, run_name))


def evaluate(dataset, output, snapshot=None, sweep=False, n_inf=None, cs_lambda=0.01):
    return json.loads(_core.cmd_eval(snapshot, dataset, output, sweep, n_inf, cs_lambda))


def benchmark(config):
    return json.loads(_core.cmd_benchmark(json.dumps(config)))


def cs(config):
    return json.loads(_core.cmd_cs(json.dumps(config)))


__all__ = [
    "ConfigError", "DimensionError", "NumericError", "SensingModel", "__version__",
    "benchmark", "cs", "cs_reconstruct", "evaluate", "generate", "load_split",
    "make_coil_maps", "make_mask", "make_phantom", "nrmse", "psnr", "reconstruct",
    "ssim", "train",
]
