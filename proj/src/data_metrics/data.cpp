// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mriunroll/coil_maps.hpp"
#include "mriunroll/errors.hpp"
#include "mriunroll/fft.hpp"

namespace mriunroll {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Ellipse {
  double cy, cx, ry, rx, angle, value, ramp_y, ramp_x;

  // Normalized coordinates in [-1, 1].
  bool contains(double y, double x) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const double dy = y - cy, dx = x - cx;
    const double u = (c * dx + s * dy) / rx;
    const double v = (-s * dx + c * dy) / ry;
    return u * u + v * v <= 1.0;
  }
  double intensity(double y, double x) const {
    return value * (1.0 + ramp_y * (y - cy) + ramp_x * (x - cx));
  }
};

}  // namespace

ComplexTensor make_phantom(std::size_t height, std::size_t width, std::uint64_t seed) {
  if (!is_power_of_two(height) || !is_power_of_two(width)) {
    throw UnsupportedSizeError("phantom extents must be powers of two");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto in = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

  std::vector<Ellipse> shapes;
  const Ellipse outer{in(-0.05, 0.05), in(-0.05, 0.05), in(0.7, 0.9), in(0.6, 0.85),
                      in(-0.3, 0.3),   in(0.6, 0.8),    in(-0.2, 0.2), in(-0.2, 0.2)};
  shapes.push_back(outer);
  const int inner = 4 + static_cast<int>(u(rng) * 5);
  for (int k = 0; k < inner; ++k) {
    const double r = std::sqrt(u(rng)) * 0.55;
    const double t = in(0.0, 2 * std::numbers::pi);
    shapes.push_back({outer.cy + r * std::sin(t) * outer.ry, outer.cx + r * std::cos(t) * outer.rx,
                      in(0.04, 0.3), in(0.04, 0.3), in(0.0, std::numbers::pi), in(-0.4, 0.4),
                      in(-0.8, 0.8), in(-0.8, 0.8)});
  }
  struct Wave {
    double fy, fx, phase, amp;
  };
  std::vector<Wave> waves;
  for (int k = 0; k < 3; ++k) {
    waves.push_back({in(-0.75, 0.75), in(-0.75, 0.75), in(0.0, 2 * std::numbers::pi),
                     in(0.1, 0.5)});
  }

  ComplexTensor out({height, width});
  for (std::size_t i = 0; i < height; ++i) {
    const double y = 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(height) - 1.0;
    for (std::size_t j = 0; j < width; ++j) {
      const double x = 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(width) - 1.0;
      double mag = 0.0;
      for (const auto& e : shapes) {
        if (e.contains(y, x)) mag += e.intensity(y, x);
      }
      mag = std::clamp(mag, 0.0, 1.0);
      double phase = 0.0;
      for (const auto& w : waves) {
        phase += w.amp * std::sin(std::numbers::pi * (w.fy * y + w.fx * x) + w.phase);
      }
      out[i * width + j] = std::polar(mag, phase);
    }
  }
  return out;
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split '" + s + "' (expected train, val, test)");
}

void DatasetSpec::validate() const {
  if (!is_power_of_two(height) || !is_power_of_two(width)) {
    throw ConfigError("dataset extents must be powers of two");
  }
  if (coils < 1) throw ConfigError("coils must be >= 1");
  if (!(acceleration >= 1.0)) throw ConfigError("acceleration must be >= 1");
  if (!(mu > 0.0)) throw ConfigError("mu must be > 0");
  if (!(step_size > 0.0)) throw ConfigError("step_size must be > 0");
  if (models_per_split < 1) throw ConfigError("models_per_split must be >= 1");
  if (snr_db && !std::isfinite(*snr_db)) throw ConfigError("snr_db must be finite");
}

std::size_t DatasetSpec::count(Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::val: return val;
    case Split::test: return test;
  }
  return 0;
}

nlohmann::json to_json(const DatasetSpec& s) {
  nlohmann::json j = {{"height", s.height},
                      {"width", s.width},
                      {"coils", s.coils},
                      {"acceleration", s.acceleration},
                      {"mask", to_string(s.mask)},
                      {"calibration", s.calibration},
                      {"mu", s.mu},
                      {"step_size", s.step_size},
                      {"train", s.train},
                      {"val", s.val},
                      {"test", s.test},
                      {"models_per_split", s.models_per_split},
                      {"seed", s.seed}};
  j["snr_db"] = s.snr_db ? nlohmann::json(*s.snr_db) : nlohmann::json(nullptr);
  return j;
}

DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
  DatasetSpec s;
  s.height = j.value("height", s.height);
  s.width = j.value("width", s.width);
  s.coils = j.value("coils", s.coils);
  s.acceleration = j.value("acceleration", s.acceleration);
  if (j.contains("mask")) s.mask = mask_kind_from_string(j.at("mask").get<std::string>());
  s.calibration = j.value("calibration", s.calibration);
  s.mu = j.value("mu", s.mu);
  s.step_size = j.value("step_size", s.step_size);
  if (j.contains("snr_db")) {
    s.snr_db = j.at("snr_db").is_null() ? std::nullopt
                                        : std::optional<double>(j.at("snr_db").get<double>());
  }
  s.train = j.value("train", s.train);
  s.val = j.value("val", s.val);
  s.test = j.value("test", s.test);
  s.models_per_split = j.value("models_per_split", s.models_per_split);
  if (!j.contains("seed")) throw ConfigError("dataset config requires an explicit seed");
  s.seed = j.at("seed").get<std::uint64_t>();
  s.validate();
  return s;
}

std::uint64_t derive_seed(std::uint64_t base, Split split, std::uint64_t stream,
                          std::uint64_t index) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(split) + 1));
  h = splitmix64(h ^ (stream + 0x100));
  return splitmix64(h ^ index);
}

Dataset generate_dataset(const DatasetSpec& spec, Split split) {
  spec.validate();
  Dataset d;
  d.split = split;
  d.spec = spec;
  for (std::size_t k = 0; k < spec.models_per_split; ++k) {
    MaskSpec ms;
    ms.kind = spec.mask;
    ms.height = spec.height;
    ms.width = spec.width;
    ms.acceleration = spec.acceleration;
    ms.calibration = spec.calibration;
    ms.seed = derive_seed(spec.seed, split, 1, k);
    d.models.push_back(std::make_shared<const SensingModel>(
        make_mask(ms),
        make_coil_maps(spec.coils, spec.height, spec.width, derive_seed(spec.seed, split, 2, k)),
        spec.step_size, spec.mu));
  }
  const std::size_t n = spec.count(split);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t seed = derive_seed(spec.seed, split, 0, i);
    const auto& model = d.models[i % d.models.size()];
    ComplexTensor x = make_phantom(spec.height, spec.width, seed);
    ComplexTensor y = forward_A(*model, x);
    if (spec.snr_db) {
      const ComplexTensor& mask = model->mask();
      const std::size_t plane = mask.numel();
      double energy = 0.0;
      std::size_t sampled = 0;
      for (std::size_t e = 0; e < y.numel(); ++e) {
        if (mask[e % plane].real() != 0.0) {
          energy += std::norm(y[e]);
          ++sampled;
        }
      }
      const double rms = std::sqrt(energy / static_cast<double>(std::max<std::size_t>(sampled, 1)));
      const double sigma = rms * std::pow(10.0, -*spec.snr_db / 20.0) / std::sqrt(2.0);
      std::mt19937_64 rng(derive_seed(spec.seed, split, 3, i));
      std::normal_distribution<double> noise(0.0, sigma);
      for (std::size_t e = 0; e < y.numel(); ++e) {
        if (mask[e % plane].real() != 0.0) y[e] += cdouble(noise(rng), noise(rng));
      }
    }
    d.samples.push_back({std::move(x), std::move(y), model});
    d.item_seeds.push_back(seed);
  }
  return d;
}

Container dataset_container(const Dataset& d) {
  Container c;
  c.meta["kind"] = "dataset";
  c.meta["split"] = to_string(d.split);
  c.meta["spec"] = to_json(d.spec);
  c.meta["item_seeds"] = d.item_seeds;
  nlohmann::json achieved = nlohmann::json::array();
  for (std::size_t k = 0; k < d.models.size(); ++k) {
    const auto& m = *d.models[k];
    achieved.push_back(m.achieved_acceleration());
    const std::string key = "model" + std::to_string(k);
    c.entries.push_back({key + ".mask", m.mask(), Dtype::float64,
                         {{"mu", m.mu()}, {"step_size", m.step_size()}}});
    c.entries.push_back({key + ".maps", m.coil_maps(), Dtype::complex128, {}});
  }
  c.meta["achieved_acceleration"] = achieved;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const std::size_t k = i % d.models.size();
    const std::string key = "item" + std::to_string(i);
    c.entries.push_back({key + ".target", d.samples[i].target, Dtype::complex128, {{"model", k}}});
    c.entries.push_back({key + ".kspace", d.samples[i].kspace, Dtype::complex128, {{"model", k}}});
  }
  return c;
}

Dataset dataset_from_container(const Container& c) {
  if (c.meta.value("kind", "") != "dataset") throw ConfigError("container is not a dataset");
  Dataset d;
  d.split = split_from_string(c.meta.at("split").get<std::string>());
  d.spec = dataset_spec_from_json(c.meta.at("spec"));
  d.item_seeds = c.meta.at("item_seeds").get<std::vector<std::uint64_t>>();
  for (std::size_t k = 0;; ++k) {
    const std::string key = "model" + std::to_string(k);
    const ContainerEntry* mask = c.find(key + ".mask");
    if (!mask) break;
    d.models.push_back(std::make_shared<const SensingModel>(
        mask->tensor, c.at(key + ".maps").tensor, mask->attrs.at("step_size").get<double>(),
        mask->attrs.at("mu").get<double>()));
  }
  if (d.models.empty()) throw ConfigError("dataset container holds no sensing models");
  for (std::size_t i = 0; i < d.item_seeds.size(); ++i) {
    const std::string key = "item" + std::to_string(i);
    const ContainerEntry& t = c.at(key + ".target");
    const auto k = t.attrs.at("model").get<std::size_t>();
    if (k >= d.models.size()) throw ConfigError("dataset item references a missing model");
    d.samples.push_back({t.tensor, c.at(key + ".kspace").tensor, d.models[k]});
  }
  return d;
}

}  // namespace mriunroll
