// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/proximal.hpp"

#include <cmath>

#include "mriunroll/errors.hpp"
#include "mriunroll/ops.hpp"

namespace mriunroll {
namespace {

struct LayerShape {
  std::size_t cout;
  std::size_t cin;
};

std::vector<LayerShape> unit_layout(const CnnSpec& s) {
  const auto f = static_cast<std::size_t>(s.features);
  if (s.kind == CnnKind::residual) return {{f, 2}, {2, f}};
  return {{f, 2}, {f, f}, {f, f}, {f, f}, {2, f}};
}

std::size_t unit_count(const CnnSpec& s) {
  return s.kind == CnnKind::residual ? static_cast<std::size_t>(s.res_blocks) : 1;
}

double layer_bound(const ComplexTensor& w) {
  const std::size_t cout = w.dim(0);
  const std::size_t cin = w.dim(1);
  const std::size_t taps = w.dim(2) * w.dim(3);
  double total = 0.0;
  for (std::size_t t = 0; t < taps; ++t) {
    double fro = 0.0;
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t i = 0; i < cin; ++i) fro += std::norm(w[(o * cin + i) * taps + t]);
    }
    total += std::sqrt(fro);
  }
  return total;
}

}  // namespace

std::string to_string(CnnKind kind) { return kind == CnnKind::residual ? "residual" : "skip5"; }

CnnKind cnn_kind_from_string(const std::string& s) {
  if (s == "residual") return CnnKind::residual;
  if (s == "skip5") return CnnKind::skip5;
  throw ConfigError("unknown cnn kind '" + s + "' (expected residual or skip5)");
}

void CnnSpec::validate() const {
  if (features < 1) throw ConfigError("cnn features must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("cnn kernel must be odd and >= 1");
  if (kind == CnnKind::residual && res_blocks < 1) throw ConfigError("res_blocks must be >= 1");
  if (invertible && !(lipschitz_target > 0.0 && lipschitz_target < 1.0)) {
    throw ConfigError("lipschitz_target must lie in (0, 1) for invertible blocks");
  }
  if (inversion_max_iterations < 1) throw ConfigError("inversion_max_iterations must be >= 1");
  if (!(inversion_tolerance > 0.0)) throw ConfigError("inversion_tolerance must be > 0");
}

nlohmann::json to_json(const CnnSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"features", s.features},
          {"kernel", s.kernel},
          {"res_blocks", s.res_blocks},
          {"invertible", s.invertible},
          {"lipschitz_target", s.lipschitz_target},
          {"inversion_max_iterations", s.inversion_max_iterations},
          {"inversion_tolerance", s.inversion_tolerance}};
}

CnnSpec cnn_spec_from_json(const nlohmann::json& j) {
  CnnSpec s;
  if (j.contains("kind")) s.kind = cnn_kind_from_string(j.at("kind").get<std::string>());
  s.features = j.value("features", s.features);
  s.kernel = j.value("kernel", s.kernel);
  s.res_blocks = j.value("res_blocks", s.res_blocks);
  s.invertible = j.value("invertible", s.invertible);
  s.lipschitz_target = j.value("lipschitz_target", s.lipschitz_target);
  s.inversion_max_iterations = j.value("inversion_max_iterations", s.inversion_max_iterations);
  s.inversion_tolerance = j.value("inversion_tolerance", s.inversion_tolerance);
  s.validate();
  return s;
}

ProximalBlock::ProximalBlock(const CnnSpec& spec, std::mt19937_64& rng, const std::string& name)
    : spec_(spec) {
  spec_.validate();
  const auto k = static_cast<std::size_t>(spec_.kernel);
  const auto layout = unit_layout(spec_);
  for (std::size_t u = 0; u < unit_count(spec_); ++u) {
    std::vector<Parameter> layers;
    for (std::size_t l = 0; l < layout.size(); ++l) {
      const Shape shape{layout[l].cout, layout[l].cin, k, k};
      ComplexTensor w = l + 1 == layout.size() ? ComplexTensor::zeros(shape)
                                               : ComplexTensor::randn(shape, rng, 0.02, true);
      layers.emplace_back(name + ".u" + std::to_string(u) + ".conv" + std::to_string(l),
                          std::move(w));
    }
    units_.push_back(std::move(layers));
  }
  enforce_contractivity();
}

std::vector<Parameter*> ProximalBlock::parameters() {
  std::vector<Parameter*> out;
  for (auto& unit : units_) {
    for (auto& p : unit) out.push_back(&p);
  }
  return out;
}

Var ProximalBlock::unit_residual(Tape& tape, std::size_t u, const Var& channels) {
  auto& layers = units_[u];
  Var h = channels;
  if (spec_.kind == CnnKind::residual) {
    h = ad::relu(tape, h);
    h = ad::conv2d(tape, h, tape.param(layers[0]));
    h = ad::relu(tape, h);
    return ad::conv2d(tape, h, tape.param(layers[1]));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (l > 0) h = ad::relu(tape, h);
    h = ad::conv2d(tape, h, tape.param(layers[l]));
  }
  return h;
}

Var ProximalBlock::apply(Tape& tape, const Var& x) {
  Var h = ad::to_channels(tape, x);
  for (std::size_t u = 0; u < units_.size(); ++u) h = ad::add(tape, h, unit_residual(tape, u, h));
  return ad::from_channels(tape, h);
}

ComplexTensor ProximalBlock::apply_values(const ComplexTensor& x) {
  Tape scratch(std::make_shared<ActivationMeter>(), /*recording=*/false);
  return apply(scratch, Var::constant(x)).value();
}

ComplexTensor ProximalBlock::unit_residual_values(std::size_t u, const ComplexTensor& channels) {
  Tape scratch(std::make_shared<ActivationMeter>(), /*recording=*/false);
  return unit_residual(scratch, u, Var::constant(channels)).value();
}

double ProximalBlock::lipschitz_bound(std::size_t u) const {
  double bound = 1.0;
  for (const auto& p : units_.at(u)) bound *= layer_bound(p.value);
  return bound;
}

void ProximalBlock::enforce_contractivity() {
  if (!spec_.invertible) return;
  for (std::size_t u = 0; u < units_.size(); ++u) {
    const double bound = lipschitz_bound(u);
    if (bound <= spec_.lipschitz_target) continue;
    const double factor =
        std::pow(spec_.lipschitz_target / bound, 1.0 / static_cast<double>(units_[u].size()));
    for (auto& p : units_[u]) p.value *= factor;
  }
}

ComplexTensor ProximalBlock::invert(const ComplexTensor& y, InversionStats* stats) {
  if (!spec_.invertible) throw ContractError("invert called on a non-invertible proximal block");
  Tape scratch(std::make_shared<ActivationMeter>(), /*recording=*/false);
  ComplexTensor target = ad::to_channels(scratch, Var::constant(y)).value();
  InversionStats local;
  for (std::size_t u = units_.size(); u-- > 0;) {
    ComplexTensor x = target;
    bool converged = false;
    int it = 0;
    double step = 0.0;
    while (it < spec_.inversion_max_iterations) {
      ComplexTensor next = target - unit_residual_values(u, x);
      ++it;
      step = norm2(next - x);
      x = std::move(next);
      if (!std::isfinite(step)) break;
      if (step < spec_.inversion_tolerance) {
        converged = true;
        break;
      }
    }
    local.iterations += it;
    local.last_step = step;
    if (!converged) {
      throw InversionError("fixed-point inversion did not converge (unit " + std::to_string(u) +
                               ", step " + std::to_string(step) + ")",
                           it, step);
    }
    target = std::move(x);
  }
  if (stats) *stats = local;
  return ad::from_channels(scratch, Var::constant(target)).value();
}

std::size_t ProximalBlock::parameter_count(const CnnSpec& spec) {
  const auto k2 = static_cast<std::size_t>(spec.kernel * spec.kernel);
  std::size_t per_unit = 0;
  for (const auto& l : unit_layout(spec)) per_unit += l.cout * l.cin * k2;
  return per_unit * unit_count(spec);
}

std::size_t ProximalBlock::activation_footprint(const CnnSpec& spec, std::size_t pixels,
                                                bool input_requires_grad) {
  const auto f = static_cast<std::size_t>(spec.features);
  const std::size_t p = pixels;
  if (spec.kind == CnnKind::residual) {
    // relu(2) + conv input(2) + relu(F) + conv input(F) per unit; the very
    // first relu of a constant input saves nothing.
    std::size_t total = unit_count(spec) * (4 + 2 * f) * p;
    if (!input_requires_grad) total -= 2 * p;
    return total;
  }
  // conv inputs 2 + 4F, relu masks 4F.
  return (2 + 8 * f) * p;
}

}  // namespace mriunroll
