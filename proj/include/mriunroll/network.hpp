// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mriunroll/container.hpp"
#include "mriunroll/proximal.hpp"
#include "mriunroll/sensing.hpp"

namespace mriunroll {

// pgd: x <- CNN(x - 2t A^H(Ax - y)); modl: x <- CNN(CG solve with prior x).
enum class NetKind { pgd, modl };

std::string to_string(NetKind kind);
NetKind net_kind_from_string(const std::string& s);

struct NetworkSpec {
  NetKind kind = NetKind::pgd;
  int iterations = 4;  // N
  int modules = 4;     // M, must divide N
  CnnSpec cnn;
  int cg_iterations = 10;
  std::uint64_t seed = 0;

  int iterations_per_module() const { return iterations / modules; }
  void validate() const;
};

nlohmann::json to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const nlohmann::json& j);

// Iterations [first, last) owned by module `index` (1-based).
struct ModuleRange {
  int index;
  int first;
  int last;
};

class UnrolledNetwork {
 public:
  explicit UnrolledNetwork(const NetworkSpec& spec);

  const NetworkSpec& spec() const { return spec_; }
  int iterations() const { return spec_.iterations; }
  int modules() const { return spec_.modules; }

  ProximalBlock& block(int iteration) { return blocks_.at(static_cast<std::size_t>(iteration)); }
  const ProximalBlock& block(int iteration) const {
    return blocks_.at(static_cast<std::size_t>(iteration));
  }

  // Module (1-based) owning a 0-based iteration.
  int module_of(int iteration) const;
  ModuleRange module_range(int m) const;

  std::vector<Parameter*> parameters();
  std::vector<Parameter*> module_parameters(int m);
  std::size_t parameter_count() const;
  static std::size_t expected_parameter_count(const NetworkSpec& spec);

  void enforce_contractivity();
  void zero_grad();

 private:
  NetworkSpec spec_;
  std::vector<ProximalBlock> blocks_;
};

// Throws ConfigError unless m divides the iteration count.
std::vector<ModuleRange> split_modules(const UnrolledNetwork& net, int m);

// Data-consistency half of iteration i (no learned weights).
Var forward_dc(Tape& tape, const UnrolledNetwork& net, const Var& x, const SensingModel& model,
               const ComplexTensor& y, const ComplexTensor& adjoint_y);
// One unrolled iteration (0-based index): DC then proximal CNN.
Var forward_iteration(Tape& tape, UnrolledNetwork& net, int i, const Var& x,
                      const SensingModel& model, const ComplexTensor& y,
                      const ComplexTensor& adjoint_y);
// Iterations [first, last).
Var forward_range(Tape& tape, UnrolledNetwork& net, int first, int last, const Var& x,
                  const SensingModel& model, const ComplexTensor& y);
// Module m (1-based) applied to x_in.
Var forward_module(Tape& tape, UnrolledNetwork& net, int m, const Var& x_in,
                   const SensingModel& model, const ComplexTensor& y);
// First n_inf iterations from x0 = A^H y, without recording.
ComplexTensor forward_full(UnrolledNetwork& net, const SensingModel& model, const ComplexTensor& y,
                           int n_inf);

// Snapshot: one float64 entry per conv weight, attrs {module, layer,
// iteration, unit, conv}; the network spec sits in meta["network"].
Container snapshot_container(const UnrolledNetwork& net);
UnrolledNetwork network_from_container(const Container& c);
void load_parameters(UnrolledNetwork& net, const Container& c);

}  // namespace mriunroll
