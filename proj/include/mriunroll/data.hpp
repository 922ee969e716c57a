// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mriunroll/container.hpp"
#include "mriunroll/mask.hpp"
#include "mriunroll/train.hpp"

namespace mriunroll {

// Ellipse phantom: a bright outer ellipse holding smaller ellipses with
// linear intensity ramps, magnitude clipped to [0, 1], smooth sinusoidal
// phase. H and W must be powers of two.
ComplexTensor make_phantom(std::size_t height, std::size_t width, std::uint64_t seed);

enum class Split { train, val, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct DatasetSpec {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t coils = 4;
  double acceleration = 4.0;
  MaskKind mask = MaskKind::poisson_disc_2d;
  std::size_t calibration = 8;
  double mu = 4.0;
  double step_size = 0.5;
  // Measurement SNR in dB over sampled entries; no noise when absent.
  std::optional<double> snr_db = 40.0;
  std::size_t train = 200;
  std::size_t val = 20;
  std::size_t test = 20;
  // Sensing models per split; item i uses model i % models_per_split.
  std::size_t models_per_split = 4;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t count(Split s) const;
};

nlohmann::json to_json(const DatasetSpec& spec);
// Throws ConfigError when "seed" is missing.
DatasetSpec dataset_spec_from_json(const nlohmann::json& j);

struct Dataset {
  Split split = Split::train;
  DatasetSpec spec;
  std::vector<std::shared_ptr<const SensingModel>> models;
  std::vector<Sample> samples;
  std::vector<std::uint64_t> item_seeds;
};

// Seeds of the phantoms, masks, coil maps and noise are derived from
// (spec.seed, split, index); splits never share a seed.
std::uint64_t derive_seed(std::uint64_t base, Split split, std::uint64_t stream,
                          std::uint64_t index);

Dataset generate_dataset(const DatasetSpec& spec, Split split);

Container dataset_container(const Dataset& d);
Dataset dataset_from_container(const Container& c);

}  // namespace mriunroll
