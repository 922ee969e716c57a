// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mriunroll/cs.hpp"
#include "mriunroll/data.hpp"
#include "mriunroll/network.hpp"
#include "mriunroll/train.hpp"

namespace mriunroll {

/// Everything one experiment needs. JSON layout:
///
///   {"output_dir": "...", "data_dir": "..." (optional),
///    "dataset": {DatasetSpec fields, "seed": required},
///    "network": {NetworkSpec fields, "seed": required},
///    "train":   {TrainConfig fields, "seed": required, "validate_every": 0},
///    "cs":      {"lambda": optional, "iterations", "levels", "step",
///                "lambda_grid": [...]},
///    "benchmark_steps": 3}
struct ExperimentConfig {
  DatasetSpec dataset;
  NetworkSpec network;
  TrainConfig train;
  int validate_every = 0;
  CsConfig cs;
  std::optional<double> cs_lambda;
  std::vector<double> lambda_grid{0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2};
  int benchmark_steps = 3;
  std::filesystem::path output_dir;
  std::filesystem::path data_dir;

  // Parses and checks referential validity (M | N, D | M, strategy/network
  // compatibility, explicit seeds). Throws ConfigError.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  std::filesystem::path split_path(Split s) const;
};

nlohmann::json read_config_json(const std::filesystem::path& path);

// Applies "a.b.c=value"; value is parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& config, const std::string& assignment);

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// Manifest with command, code version, config hash, seeds and the SHA-256 of
// every listed file (paths relative to `dir`). Written to dir/manifest.json.
nlohmann::json write_manifest(const std::filesystem::path& dir, const std::string& command,
                              const ExperimentConfig& cfg,
                              const std::vector<std::filesystem::path>& files,
                              const nlohmann::json& extra = nlohmann::json::object());

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

nlohmann::json cmd_generate(const ExperimentConfig& cfg);

struct TrainOptions {
  std::optional<std::filesystem::path> resume;
  // Overrides total_iterations for partial runs.
  std::optional<int> stop_after;
  std::string run_name;  // defaults to the strategy name
};
nlohmann::json cmd_train(const ExperimentConfig& cfg, const TrainOptions& opts = {});

struct EvalOptions {
  std::optional<std::filesystem::path> snapshot;  // absent: CS baseline
  std::filesystem::path dataset;
  bool sweep = false;
  std::optional<int> n_inf;
  CsConfig cs;
  std::filesystem::path output;  // directory for metrics files
};
nlohmann::json cmd_eval(const EvalOptions& opts);

nlohmann::json cmd_benchmark(const ExperimentConfig& cfg);
nlohmann::json cmd_cs(const ExperimentConfig& cfg);

}  // namespace mriunroll
