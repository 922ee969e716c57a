// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mriunroll/coil_maps.hpp"
#include "mriunroll/cs.hpp"
#include "mriunroll/data.hpp"
#include "mriunroll/errors.hpp"
#include "mriunroll/experiment.hpp"
#include "mriunroll/mask.hpp"
#include "mriunroll/metrics.hpp"
#include "mriunroll/network.hpp"
#include "mriunroll/sensing.hpp"

namespace py = pybind11;
using namespace mriunroll;

namespace {

using CArray = py::array_t<cdouble, py::array::c_style | py::array::forcecast>;

ComplexTensor to_tensor(const CArray& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return ComplexTensor(shape, std::vector<cdouble>(a.data(), a.data() + a.size()));
}

CArray to_array(const ComplexTensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  CArray out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

nlohmann::json parse(const std::string& text) { return nlohmann::json::parse(text); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Unrolled MRI reconstruction: physics, networks, training strategies";
  m.attr("__version__") = MRIUNROLL_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  auto numeric = py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  (void)numeric;

  m.def("make_phantom", [](std::size_t h, std::size_t w, std::uint64_t seed) {
    return to_array(make_phantom(h, w, seed));
  }, py::arg("height"), py::arg("width"), py::arg("seed"));

  m.def("make_mask", [](const std::string& kind, std::size_t h, std::size_t w, double r,
                        std::size_t calibration, std::uint64_t seed) {
    MaskSpec s{mask_kind_from_string(kind), h, w, r, calibration, seed};
    return to_array(make_mask(s));
  }, py::arg("kind"), py::arg("height"), py::arg("width"), py::arg("acceleration"),
     py::arg("calibration"), py::arg("seed"));

  m.def("make_coil_maps", [](std::size_t coils, std::size_t h, std::size_t w,
                             std::uint64_t seed) {
    return to_array(make_coil_maps(coils, h, w, seed));
  }, py::arg("coils"), py::arg("height"), py::arg("width"), py::arg("seed"));

  py::class_<SensingModel, std::shared_ptr<SensingModel>>(m, "SensingModel")
      .def(py::init([](const CArray& mask, const CArray& maps, double t, double mu) {
             return std::make_shared<SensingModel>(to_tensor(mask), to_tensor(maps), t, mu);
           }),
           py::arg("mask"), py::arg("coil_maps"), py::arg("step_size") = 0.5,
           py::arg("mu") = 4.0)
      .def_property_readonly("step_size", &SensingModel::step_size)
      .def_property_readonly("mu", &SensingModel::mu)
      .def_property_readonly("coils", &SensingModel::coils)
      .def("achieved_acceleration", &SensingModel::achieved_acceleration)
      .def("forward", [](const SensingModel& s, const CArray& x) {
        return to_array(forward_A(s, to_tensor(x)));
      })
      .def("adjoint", [](const SensingModel& s, const CArray& y) {
        return to_array(adjoint_A(s, to_tensor(y)));
      })
      .def("normal", [](const SensingModel& s, const CArray& x) {
        return to_array(normal_A(s, to_tensor(x)));
      })
      .def("dc_step", [](const SensingModel& s, const CArray& x, const CArray& y) {
        return to_array(dc_step(s, to_tensor(x), to_tensor(y)));
      })
      .def("cg_solve", [](const SensingModel& s, const CArray& ahy, const CArray& z, int it) {
        const CgResult r = cg_solve(s, to_tensor(ahy), to_tensor(z), it);
        return py::make_tuple(to_array(r.x), r.relative_residuals);
      }, py::arg("adjoint_y"), py::arg("z"), py::arg("iterations"));

  m.def("cs_reconstruct", [](const SensingModel& s, const CArray& y, double lambda,
                             int iterations, int levels) {
    CsConfig c;
    c.lambda = lambda;
    c.iterations = iterations;
    c.levels = levels;
    const CsResult r = cs_reconstruct(s, to_tensor(y), c);
    return py::make_tuple(to_array(r.image), r.objective);
  }, py::arg("model"), py::arg("kspace"), py::arg("lam") = 0.01, py::arg("iterations") = 100,
     py::arg("levels") = 3);

  m.def("psnr", [](const CArray& a, const CArray& b) { return psnr(to_tensor(a), to_tensor(b)); });
  m.def("ssim", [](const CArray& a, const CArray& b) { return ssim(to_tensor(a), to_tensor(b)); });
  m.def("nrmse", [](const CArray& a, const CArray& b) {
    return nrmse(to_tensor(a), to_tensor(b));
  });

  m.def("reconstruct", [](const std::filesystem::path& snapshot, const SensingModel& s,
                          const CArray& y, int n_inf) {
    UnrolledNetwork net = network_from_container(read_container(snapshot));
    return to_array(forward_full(net, s, to_tensor(y), n_inf < 0 ? net.iterations() : n_inf));
  }, py::arg("snapshot"), py::arg("model"), py::arg("kspace"), py::arg("n_inf") = -1);

  m.def("load_split", [](const std::filesystem::path& path) {
    const Dataset d = dataset_from_container(read_container(path));
    py::list targets, kspace, models;
    for (const auto& s : d.samples) {
      targets.append(to_array(s.target));
      kspace.append(to_array(s.kspace));
      models.append(std::const_pointer_cast<SensingModel>(s.model));
    }
    return py::make_tuple(targets, kspace, models);
  }, py::arg("path"));

  // Commands take and return JSON text; the Python package converts to dicts.
  m.def("cmd_generate", [](const std::string& cfg) {
    py::gil_scoped_release release;
    return cmd_generate(ExperimentConfig::from_json(parse(cfg))).dump();
  });
  m.def("cmd_train", [](const std::string& cfg, std::optional<std::filesystem::path> resume,
                        std::optional<int> stop_after, const std::string& run_name) {
    py::gil_scoped_release release;
    TrainOptions o{resume, stop_after, run_name};
    return cmd_train(ExperimentConfig::from_json(parse(cfg)), o).dump();
  }, py::arg("config"), py::arg("resume") = py::none(), py::arg("stop_after") = py::none(),
     py::arg("run_name") = "");
  m.def("cmd_eval", [](std::optional<std::filesystem::path> snapshot,
                       const std::filesystem::path& dataset, const std::filesystem::path& output,
                       bool sweep, std::optional<int> n_inf, double cs_lambda) {
    py::gil_scoped_release release;
    EvalOptions o;
    o.snapshot = snapshot;
    o.dataset = dataset;
    o.output = output;
    o.sweep = sweep;
    o.n_inf = n_inf;
    o.cs.lambda = cs_lambda;
    return cmd_eval(o).dump();
  }, py::arg("snapshot"), py::arg("dataset"), py::arg("output"), py::arg("sweep") = false,
     py::arg("n_inf") = py::none(), py::arg("cs_lambda") = 0.01);
  m.def("cmd_benchmark", [](const std::string& cfg) {
    py::gil_scoped_release release;
    return cmd_benchmark(ExperimentConfig::from_json(parse(cfg))).dump();
  });
  m.def("cmd_cs", [](const std::string& cfg) {
    py::gil_scoped_release release;
    return cmd_cs(ExperimentConfig::from_json(parse(cfg))).dump();
  });
}
