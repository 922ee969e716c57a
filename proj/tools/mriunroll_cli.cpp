// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

// Command line front end: generate, train, eval, benchmark, cs, sweep.
// Exit codes: 0 success, 2 configuration error, 3 numeric failure.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mriunroll/errors.hpp"
#include "mriunroll/experiment.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericError = 3;

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
};

void add_config_args(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.path, "Experiment config (JSON)")->required();
  cmd->add_option("--set", args.overrides, "Override a config value, e.g. train.seed=3");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mriunroll;
  CLI::App app{"Unrolled MRI reconstruction experiments", "mriunroll"};
  app.set_version_flag("--version", MRIUNROLL_VERSION);
  app.require_subcommand(1);

  ConfigArgs gen_args, train_args, bench_args, cs_args;
  auto* gen = app.add_subcommand("generate", "Write the synthetic dataset splits");
  add_config_args(gen, gen_args);

  auto* train = app.add_subcommand("train", "Train a network; writes report and snapshot");
  add_config_args(train, train_args);
  TrainOptions topts;
  std::string resume;
  int stop_after = -1;
  train->add_option("--resume", resume, "Snapshot to continue from");
  train->add_option("--stop-after", stop_after, "Stop once this many steps are done");
  train->add_option("--run-name", topts.run_name, "Output subdirectory (default: strategy)");

  EvalOptions eopts;
  std::string snapshot, output = "eval";
  int n_inf = -1;
  double cs_lambda = CsConfig{}.lambda;
  auto* eval = app.add_subcommand("eval", "Evaluate a snapshot, or the CS baseline without one");
  eval->add_option("--snapshot", snapshot, "Network snapshot; omit for the CS baseline");
  eval->add_option("--dataset", eopts.dataset, "Dataset split file")->required();
  eval->add_option("-o,--output", output, "Output directory");
  eval->add_flag("--sweep", eopts.sweep, "Also emit one row per inference depth");
  eval->add_option("--n-inf", n_inf, "Iterations used at inference");
  eval->add_option("--cs-lambda", cs_lambda, "CS regularization weight");
  eval->add_option("--cs-iterations", eopts.cs.iterations, "CS iterations");

  auto* bench = app.add_subcommand("benchmark", "Peak memory and timing for every strategy");
  add_config_args(bench, bench_args);

  auto* cs = app.add_subcommand("cs", "Tune and evaluate the CS baseline");
  add_config_args(cs, cs_args);

  EvalOptions sopts;
  std::string sweep_snapshot, sweep_output = "sweep";
  auto* sweep = app.add_subcommand("sweep", "Metrics at every inference depth");
  sweep->add_option("--snapshot", sweep_snapshot, "Network snapshot")->required();
  sweep->add_option("--dataset", sopts.dataset, "Dataset split file")->required();
  sweep->add_option("-o,--output", sweep_output, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    nlohmann::json out;
    if (*gen) {
      out = cmd_generate(load_config(gen_args.path, gen_args.overrides));
    } else if (*train) {
      if (!resume.empty()) topts.resume = resume;
      if (stop_after >= 0) topts.stop_after = stop_after;
      out = cmd_train(load_config(train_args.path, train_args.overrides), topts);
    } else if (*eval) {
      if (!snapshot.empty()) eopts.snapshot = snapshot;
      if (n_inf >= 0) eopts.n_inf = n_inf;
      eopts.cs.lambda = cs_lambda;
      eopts.cs.validate();
      eopts.output = output;
      out = cmd_eval(eopts);
    } else if (*bench) {
      out = cmd_benchmark(load_config(bench_args.path, bench_args.overrides));
    } else if (*cs) {
      out = cmd_cs(load_config(cs_args.path, cs_args.overrides));
    } else if (*sweep) {
      sopts.snapshot = sweep_snapshot;
      sopts.sweep = true;
      sopts.output = sweep_output;
      out = cmd_eval(sopts);
    }
    std::cout << out.dump(2) << '\n';
    return 0;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::invalid_argument& e) {
    // ConfigError, DimensionError and UnsupportedSizeError.
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
