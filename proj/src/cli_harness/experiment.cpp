// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/experiment.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "mriunroll/errors.hpp"
#include "mriunroll/metrics.hpp"

namespace mriunroll {
namespace fs = std::filesystem;
namespace {

const nlohmann::json& section(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_object()) {
    throw ConfigError(std::string("config is missing the '") + key + "' section");
  }
  return j.at(key);
}

void reject_unknown(const nlohmann::json& j, const char* where,
                    std::initializer_list<const char*> known) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

void require_seed(const nlohmann::json& j, const char* where) {
  if (!j.contains("seed")) throw ConfigError(std::string(where) + ": missing seed");
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw ConfigError("failed writing '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string metrics_csv(const std::vector<std::pair<std::string, MetricSet>>& rows) {
  std::ostringstream s;
  s << "method,count,psnr_mean,psnr_std,ssim_mean,ssim_std,nrmse_mean,nrmse_std\n";
  for (const auto& [name, m] : rows) {
    const auto p = m.psnr_summary(), q = m.ssim_summary(), r = m.nrmse_summary();
    s << name << ',' << m.psnr.size() << ',' << fmt(p.mean) << ',' << fmt(p.std) << ','
      << fmt(q.mean) << ',' << fmt(q.std) << ',' << fmt(r.mean) << ',' << fmt(r.std) << '\n';
  }
  return s.str();
}

Dataset load_split(const ExperimentConfig& cfg, Split s) {
  const fs::path p = cfg.split_path(s);
  if (!fs::exists(p)) {
    throw ConfigError("dataset file '" + p.string() + "' not found; run `generate` first");
  }
  return dataset_from_container(read_container(p));
}


}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, "config",
                 {"output_dir", "data_dir", "dataset", "network", "train", "cs", "benchmark_steps"});
  if (!j.contains("output_dir")) throw ConfigError("config is missing 'output_dir'");
  c.output_dir = j.at("output_dir").get<std::string>();
  c.data_dir = j.contains("data_dir") ? fs::path(j.at("data_dir").get<std::string>())
                                      : c.output_dir / "data";

  const auto& ds = section(j, "dataset");
  require_seed(ds, "dataset");
  reject_unknown(ds, "dataset",
                 {"height", "width", "coils", "acceleration", "mask", "calibration", "mu",
                  "step_size", "snr_db", "train", "val", "test", "models_per_split", "seed"});
  c.dataset = dataset_spec_from_json(ds);

  const auto& net = section(j, "network");
  require_seed(net, "network");
  reject_unknown(net, "network", {"kind", "iterations", "modules", "cnn", "cg_iterations", "seed"});
  if (net.contains("cnn")) {
    reject_unknown(net.at("cnn"), "network.cnn",
                   {"kind", "features", "kernel", "res_blocks", "invertible", "lipschitz_target",
                    "inversion_max_iterations", "inversion_tolerance"});
  }
  c.network = network_spec_from_json(net);

  const auto& tr = section(j, "train");
  require_seed(tr, "train");
  reject_unknown(tr, "train",
                 {"strategy", "workers", "batch_size", "total_iterations", "lr", "beta1", "beta2",
                  "eps_adam", "checkpoints", "module_lr", "seed", "validate_every"});
  c.train = train_config_from_json(tr);
  c.validate_every = tr.value("validate_every", 0);
  if (c.validate_every < 0) throw ConfigError("validate_every must be >= 0");
  c.train.validate(c.network);

  if (j.contains("cs")) {
    const auto& cs = j.at("cs");
    reject_unknown(cs, "cs", {"lambda", "iterations", "levels", "step", "lambda_grid"});
    if (cs.contains("lambda")) c.cs_lambda = cs.at("lambda").get<double>();
    c.cs.iterations = cs.value("iterations", c.cs.iterations);
    c.cs.levels = cs.value("levels", c.cs.levels);
    c.cs.step = cs.value("step", c.cs.step);
    c.lambda_grid = cs.value("lambda_grid", c.lambda_grid);
    if (c.cs_lambda) c.cs.lambda = *c.cs_lambda;
    c.cs.validate();
    if (c.lambda_grid.empty()) throw ConfigError("cs.lambda_grid must not be empty");
  }
  c.benchmark_steps = j.value("benchmark_steps", c.benchmark_steps);
  if (c.benchmark_steps < 1) throw ConfigError("benchmark_steps must be >= 1");
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json tr = mriunroll::to_json(train);
  tr["validate_every"] = validate_every;
  nlohmann::json cs = {{"iterations", this->cs.iterations},
                       {"levels", this->cs.levels},
                       {"step", this->cs.step},
                       {"lambda_grid", lambda_grid}};
  if (cs_lambda) cs["lambda"] = *cs_lambda;
  return {{"output_dir", output_dir.string()},
          {"data_dir", data_dir.string()},
          {"dataset", mriunroll::to_json(dataset)},
          {"network", mriunroll::to_json(network)},
          {"train", tr},
          {"cs", cs},
          {"benchmark_steps", benchmark_steps}};
}

fs::path ExperimentConfig::split_path(Split s) const {
  return data_dir / (to_string(s) + ".bin");
}

nlohmann::json read_config_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path.string() + "'");
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void apply_override(nlohmann::json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like key.path=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  nlohmann::json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' crosses a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = nlohmann::json::object();
    start = dot + 1;
  }
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  nlohmann::json j = read_config_json(path);
  for (const auto& o : overrides) apply_override(j, o);
  return ExperimentConfig::from_json(j);
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::ostringstream s;
  for (unsigned int i = 0; i < len; ++i) {
    s << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return s.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return sha256_hex(ss.str());
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open '" + path.string() + "'");
  return nlohmann::json::parse(f);
}

nlohmann::json write_manifest(const fs::path& dir, const std::string& command,
                              const ExperimentConfig& cfg, const std::vector<fs::path>& files,
                              const nlohmann::json& extra) {
  nlohmann::json identity = cfg.to_json();
  identity.erase("output_dir");
  identity.erase("data_dir");
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& f : files) hashes[f.string()] = sha256_file(dir / f);
  nlohmann::json m = {{"command", command},
                      {"code_version", MRIUNROLL_VERSION},
                      {"config_hash", sha256_hex(identity.dump())},
                      {"seeds",
                       {{"dataset", cfg.dataset.seed},
                        {"network", cfg.network.seed},
                        {"train", cfg.train.seed}}},
                      {"files", hashes}};
  for (const auto& [k, v] : extra.items()) m[k] = v;
  write_json(dir / "manifest.json", m);
  return m;
}

nlohmann::json cmd_generate(const ExperimentConfig& cfg) {
  ensure_dir(cfg.data_dir);
  std::vector<fs::path> files;
  nlohmann::json achieved = nlohmann::json::object();
  for (Split s : {Split::train, Split::val, Split::test}) {
    const Dataset d = generate_dataset(cfg.dataset, s);
    const fs::path name = to_string(s) + ".bin";
    write_container(cfg.data_dir / name, dataset_container(d));
    files.push_back(name);
    nlohmann::json r = nlohmann::json::array();
    for (const auto& m : d.models) r.push_back(m->achieved_acceleration());
    achieved[to_string(s)] = r;
  }
  return write_manifest(cfg.data_dir, "generate", cfg, files,
                        {{"requested_acceleration", cfg.dataset.acceleration},
                         {"achieved_acceleration", achieved}});
}

nlohmann::json cmd_train(const ExperimentConfig& cfg, const TrainOptions& opts) {
  const Dataset train = load_split(cfg, Split::train);
  const Dataset val = load_split(cfg, Split::val);
  if (train.samples.empty()) throw ConfigError("training split is empty");
  UnrolledNetwork net(cfg.network);

  Trainer trainer(net, train.samples, cfg.train);
  if (cfg.validate_every > 0) {
    trainer.validate_every = cfg.validate_every;
    trainer.validator = [&val](UnrolledNetwork& n) {
      return evaluate_network(n, val.samples, n.iterations()).psnr_summary().mean;
    };
  }
  if (opts.resume) {
    const Container state = read_container(*opts.resume);
    const NetworkSpec saved = network_spec_from_json(state.meta.at("network"));
    if (to_json(saved) != to_json(cfg.network)) {
      throw ConfigError("snapshot network spec does not match the config");
    }
    trainer.restore(state);
  }
  const int target = opts.stop_after ? std::min(*opts.stop_after, cfg.train.total_iterations)
                                     : cfg.train.total_iterations;

  const std::string run = opts.run_name.empty() ? to_string(cfg.train.strategy) : opts.run_name;
  const fs::path dir = cfg.output_dir / run;
  ensure_dir(dir);
  auto save = [&]() {
    write_container(dir / "snapshot.bin", trainer.state());
    write_json(dir / "report.json", trainer.report().to_json());
    write_json(dir / "timing.json", trainer.report().timing_json());
  };
  try {
    trainer.run(target - trainer.step());
  } catch (const TrainingAborted& e) {
    write_json(dir / "report.json", e.partial().to_json());
    throw;
  }
  save();
  return write_manifest(dir, "train", cfg, {"report.json", "snapshot.bin"},
                        {{"run", run}, {"steps_completed", trainer.step()}});
}

nlohmann::json cmd_eval(const EvalOptions& opts) {
  const Dataset d = dataset_from_container(read_container(opts.dataset));
  ensure_dir(opts.output);
  nlohmann::json out;
  std::vector<std::pair<std::string, MetricSet>> rows;
  if (opts.snapshot) {
    UnrolledNetwork net = network_from_container(read_container(*opts.snapshot));
    const int n_inf = opts.n_inf.value_or(net.iterations());
    if (n_inf < 1 || n_inf > net.iterations()) {
      throw ConfigError("n_inf must lie in [1, " + std::to_string(net.iterations()) + "]");
    }
    rows.emplace_back("network", evaluate_network(net, d.samples, n_inf));
    out["n_inf"] = n_inf;
    if (opts.sweep) {
      std::ostringstream csv;
      csv << "n_inf,psnr_mean,psnr_std,ssim_mean,ssim_std,nrmse_mean,nrmse_std\n";
      nlohmann::json sweep = nlohmann::json::array();
      for (const auto& r : inference_sweep(net, d.samples)) {
        csv << r.n_inf << ',' << fmt(r.psnr.mean) << ',' << fmt(r.psnr.std) << ','
            << fmt(r.ssim.mean) << ',' << fmt(r.ssim.std) << ',' << fmt(r.nrmse.mean) << ','
            << fmt(r.nrmse.std) << '\n';
        sweep.push_back({{"n_inf", r.n_inf},
                         {"psnr_mean", r.psnr.mean},
                         {"psnr_std", r.psnr.std},
                         {"ssim_mean", r.ssim.mean},
                         {"nrmse_mean", r.nrmse.mean}});
      }
      write_text(opts.output / "sweep.csv", csv.str());
      out["sweep"] = sweep;
    }
  } else {
    rows.emplace_back("cs", evaluate_cs(d.samples, opts.cs));
    out["cs_lambda"] = opts.cs.lambda;
  }
  out["split"] = to_string(d.split);
  out["metrics"] = rows.front().second.to_json();
  write_text(opts.output / "metrics.csv", metrics_csv(rows));
  write_json(opts.output / "metrics.json", out);
  return out;
}

nlohmann::json cmd_benchmark(const ExperimentConfig& cfg) {
  const Dataset train = load_split(cfg, Split::train);
  const std::size_t pixels = train.samples.front().target.numel();
  const fs::path dir = cfg.output_dir / "benchmark";
  ensure_dir(dir);
  std::ostringstream csv;
  csv << "strategy,workers,peak_elements,predicted_elements,seconds_per_iteration,"
         "forward_seconds,backward_seconds,merged\n";
  nlohmann::json rows = nlohmann::json::array();
  std::vector<std::pair<Strategy, int>> runs = {
      {Strategy::e2e_bp, 1}, {Strategy::checkpointing, 1}, {Strategy::mel, 1}, {Strategy::gleam, 1}};
  if (cfg.train.workers > 1) runs.emplace_back(Strategy::gleam, cfg.train.workers);
  for (const auto& [strategy, workers] : runs) {
    TrainConfig tc = cfg.train;
    tc.strategy = strategy;
    tc.workers = workers;
    tc.total_iterations = cfg.benchmark_steps;
    tc.checkpoints = -1;
    nlohmann::json row = {{"strategy", to_string(strategy)}, {"workers", workers}};
    try {
      tc.validate(cfg.network);
    } catch (const ConfigError& e) {
      row["skipped"] = e.what();
      rows.push_back(row);
      csv << to_string(strategy) << ',' << workers << ",,,,,,\n";
      continue;
    }
    UnrolledNetwork net(cfg.network);
    Trainer t(net, train.samples, tc);
    t.run_all();
    const TrainReport& r = t.report();
    const double per = r.total_seconds / r.steps_completed;
    row["peak_elements"] = r.peak_activation_elements;
    row["predicted_elements"] = predicted_peak(cfg.network, tc, pixels);
    row["seconds_per_iteration"] = per;
    row["forward_seconds"] = r.forward_seconds / r.steps_completed;
    row["backward_seconds"] = r.backward_seconds / r.steps_completed;
    row["merged"] = r.timing_merged;
    rows.push_back(row);
    csv << to_string(strategy) << ',' << workers << ',' << r.peak_activation_elements << ','
        << row["predicted_elements"].get<std::size_t>() << ',' << fmt(per) << ','
        << fmt(r.forward_seconds / r.steps_completed) << ','
        << fmt(r.backward_seconds / r.steps_completed) << ','
        << (r.timing_merged ? 1 : 0) << '\n';
  }
  write_text(dir / "benchmark.csv", csv.str());
  nlohmann::json out = {{"rows", rows}, {"steps", cfg.benchmark_steps}};
  write_json(dir / "benchmark.json", out);
  return out;
}

nlohmann::json cmd_cs(const ExperimentConfig& cfg) {
  const Dataset val = load_split(cfg, Split::val);
  const Dataset test = load_split(cfg, Split::test);
  CsConfig cs = cfg.cs;
  nlohmann::json out;
  if (cfg.cs_lambda) {
    cs.lambda = *cfg.cs_lambda;
  } else {
    const LambdaChoice choice = tune_cs_lambda(val.samples, cfg.lambda_grid, cs);
    cs.lambda = choice.lambda;
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& [l, s] : choice.scores) scores.push_back({{"lambda", l}, {"val_psnr", s}});
    out["tuning"] = scores;
  }
  const MetricSet m = evaluate_cs(test.samples, cs);
  const fs::path dir = cfg.output_dir / "cs";
  ensure_dir(dir);
  out["lambda"] = cs.lambda;
  out["iterations"] = cs.iterations;
  out["metrics"] = m.to_json();
  write_json(dir / "metrics.json", out);
  write_text(dir / "metrics.csv", metrics_csv({{"cs", m}}));
  return out;
}

}  // namespace mriunroll
