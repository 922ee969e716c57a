// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/network.hpp"

#include "mriunroll/errors.hpp"
#include "mriunroll/ops.hpp"

namespace mriunroll {

std::string to_string(NetKind kind) { return kind == NetKind::pgd ? "pgd" : "modl"; }

NetKind net_kind_from_string(const std::string& s) {
  if (s == "pgd") return NetKind::pgd;
  if (s == "modl") return NetKind::modl;
  throw ConfigError("unknown network kind '" + s + "' (expected pgd or modl)");
}

void NetworkSpec::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (modules < 1 || modules > iterations) {
    throw ConfigError("modules must lie in [1, iterations]");
  }
  if (iterations % modules != 0) {
    throw ConfigError("modules (" + std::to_string(modules) + ") must divide iterations (" +
                      std::to_string(iterations) + ")");
  }
  if (kind == NetKind::modl && cg_iterations < 1) throw ConfigError("cg_iterations must be >= 1");
  cnn.validate();
}

nlohmann::json to_json(const NetworkSpec& s) {
  return {{"kind", to_string(s.kind)},   {"iterations", s.iterations},
          {"modules", s.modules},         {"cnn", to_json(s.cnn)},
          {"cg_iterations", s.cg_iterations}, {"seed", s.seed}};
}

NetworkSpec network_spec_from_json(const nlohmann::json& j) {
  NetworkSpec s;
  if (j.contains("kind")) s.kind = net_kind_from_string(j.at("kind").get<std::string>());
  s.iterations = j.value("iterations", s.iterations);
  s.modules = j.value("modules", s.modules);
  if (j.contains("cnn")) {
    s.cnn = cnn_spec_from_json(j.at("cnn"));
  } else {
    s.cnn.kind = s.kind == NetKind::pgd ? CnnKind::residual : CnnKind::skip5;
  }
  s.cg_iterations = j.value("cg_iterations", s.cg_iterations);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

UnrolledNetwork::UnrolledNetwork(const NetworkSpec& spec) : spec_(spec) {
  spec_.validate();
  std::mt19937_64 rng(spec_.seed);
  blocks_.reserve(static_cast<std::size_t>(spec_.iterations));
  for (int i = 0; i < spec_.iterations; ++i) {
    blocks_.emplace_back(spec_.cnn, rng, "it" + std::to_string(i));
  }
}

int UnrolledNetwork::module_of(int iteration) const {
  if (iteration < 0 || iteration >= spec_.iterations) {
    throw ConfigError("iteration index out of range");
  }
  return iteration / spec_.iterations_per_module() + 1;
}

ModuleRange UnrolledNetwork::module_range(int m) const {
  if (m < 1 || m > spec_.modules) {
    throw ConfigError("module index " + std::to_string(m) + " out of range [1, " +
                      std::to_string(spec_.modules) + "]");
  }
  const int k = spec_.iterations_per_module();
  return {m, (m - 1) * k, m * k};
}

std::vector<Parameter*> UnrolledNetwork::parameters() {
  std::vector<Parameter*> out;
  for (auto& b : blocks_) {
    for (auto* p : b.parameters()) out.push_back(p);
  }
  return out;
}

std::vector<Parameter*> UnrolledNetwork::module_parameters(int m) {
  const ModuleRange r = module_range(m);
  std::vector<Parameter*> out;
  for (int i = r.first; i < r.last; ++i) {
    for (auto* p : block(i).parameters()) out.push_back(p);
  }
  return out;
}

std::size_t UnrolledNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) {
    for (std::size_t u = 0; u < b.units(); ++u) {
      for (const auto& p : b.unit(u)) n += p.value.numel();
    }
  }
  return n;
}

std::size_t UnrolledNetwork::expected_parameter_count(const NetworkSpec& spec) {
  return static_cast<std::size_t>(spec.iterations) * ProximalBlock::parameter_count(spec.cnn);
}

void UnrolledNetwork::enforce_contractivity() {
  for (auto& b : blocks_) b.enforce_contractivity();
}

void UnrolledNetwork::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

std::vector<ModuleRange> split_modules(const UnrolledNetwork& net, int m) {
  const int n = net.iterations();
  if (m < 1 || m > n || n % m != 0) {
    throw ConfigError("cannot split " + std::to_string(n) + " iterations into " +
                      std::to_string(m) + " modules");
  }
  std::vector<ModuleRange> out;
  const int k = n / m;
  for (int i = 1; i <= m; ++i) out.push_back({i, (i - 1) * k, i * k});
  return out;
}

Var forward_dc(Tape& tape, const UnrolledNetwork& net, const Var& x, const SensingModel& model,
               const ComplexTensor& y, const ComplexTensor& adjoint_y) {
  if (net.spec().kind == NetKind::pgd) return ad::dc_step(tape, model, x, y);
  return ad::cg_solve(tape, model, adjoint_y, x, net.spec().cg_iterations);
}

Var forward_iteration(Tape& tape, UnrolledNetwork& net, int i, const Var& x,
                      const SensingModel& model, const ComplexTensor& y,
                      const ComplexTensor& adjoint_y) {
  Var z = forward_dc(tape, net, x, model, y, adjoint_y);
  return net.block(i).apply(tape, z);
}

Var forward_range(Tape& tape, UnrolledNetwork& net, int first, int last, const Var& x,
                  const SensingModel& model, const ComplexTensor& y) {
  if (first < 0 || last > net.iterations() || first > last) {
    throw ConfigError("iteration range out of bounds");
  }
  const ComplexTensor ahy = adjoint_A(model, y);
  Var h = x;
  for (int i = first; i < last; ++i) h = forward_iteration(tape, net, i, h, model, y, ahy);
  return h;
}

Var forward_module(Tape& tape, UnrolledNetwork& net, int m, const Var& x_in,
                   const SensingModel& model, const ComplexTensor& y) {
  const ModuleRange r = net.module_range(m);
  return forward_range(tape, net, r.first, r.last, x_in, model, y);
}

ComplexTensor forward_full(UnrolledNetwork& net, const SensingModel& model, const ComplexTensor& y,
                           int n_inf) {
  if (n_inf < 1 || n_inf > net.iterations()) {
    throw ConfigError("n_inf must lie in [1, " + std::to_string(net.iterations()) + "]");
  }
  Tape scratch(std::make_shared<ActivationMeter>(), /*recording=*/false);
  const Var x0 = Var::constant(adjoint_A(model, y));
  return forward_range(scratch, net, 0, n_inf, x0, model, y).value();
}

Container snapshot_container(const UnrolledNetwork& net) {
  Container c;
  c.meta["network"] = to_json(net.spec());
  c.meta["kind"] = "snapshot";
  std::vector<int> layer_in_module(static_cast<std::size_t>(net.modules()) + 1, 0);
  for (int i = 0; i < net.iterations(); ++i) {
    const int m = net.module_of(i);
    const ProximalBlock& b = net.block(i);
    for (std::size_t u = 0; u < b.units(); ++u) {
      for (std::size_t l = 0; l < b.unit(u).size(); ++l) {
        const Parameter& p = b.unit(u)[l];
        c.entries.push_back({p.name, p.value, Dtype::float64,
                             {{"module", m},
                              {"layer", layer_in_module[static_cast<std::size_t>(m)]++},
                              {"iteration", i},
                              {"unit", u},
                              {"conv", l}}});
      }
    }
  }
  return c;
}

void load_parameters(UnrolledNetwork& net, const Container& c) {
  for (auto* p : net.parameters()) {
    const ContainerEntry& e = c.at(p->name);
    if (e.tensor.shape() != p->value.shape()) {
      throw DimensionError("snapshot entry '" + p->name + "' has shape " +
                           shape_to_string(e.tensor.shape()) + ", network expects " +
                           shape_to_string(p->value.shape()));
    }
    p->value = e.tensor;
  }
}

UnrolledNetwork network_from_container(const Container& c) {
  if (!c.meta.contains("network")) throw ConfigError("container holds no network spec");
  UnrolledNetwork net(network_spec_from_json(c.meta.at("network")));
  load_parameters(net, c);
  return net;
}

}  // namespace mriunroll
