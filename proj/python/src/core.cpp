#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "convexify/carleman.hpp"
#include "convexify/config.hpp"
#include "convexify/errors.hpp"
#include "convexify/pipeline.hpp"

namespace py = pybind11;
using namespace convexify;

namespace {

// (n_k, n_h, n_h, n_z) for fields with a k axis, (n_h, n_h, n_z) otherwise.
py::array_t<cplx> to_numpy(const Field& f) {
  const GridSpec& g = f.grid();
  std::vector<py::ssize_t> shape{g.n_h(), g.n_h(), g.n_z()};
  if (f.has_k_axis()) shape.insert(shape.begin(), g.n_k());
  py::array_t<cplx> a(shape);
  std::copy(f.values().begin(), f.values().end(), a.mutable_data());
  return a;
}

Field from_numpy(const GridSpec& g, py::array_t<cplx, py::array::c_style | py::array::forcecast> a) {
  const bool with_k = a.ndim() == 4;
  Field f(g, with_k);
  if (static_cast<std::size_t>(a.size()) != f.size() || (a.ndim() != 3 && a.ndim() != 4))
    throw StructuralError("array shape does not match the grid");
  std::copy(a.data(), a.data() + a.size(), f.values().begin());
  return f;
}

py::dict result_dict(const InversionOutputs& out) {
  py::dict d;
  d["c_comp"] = out.result.c_comp;
  d["location"] = out.result.location;
  d["location_index"] = out.result.location_index;
  d["k"] = out.result.k;
  d["iterations"] = static_cast<int>(out.state.history.size()) - 1;
  d["converged"] = out.state.converged;
  d["J"] = out.state.J;
  d["mu"] = out.mu;
  d["lambda"] = out.lambda;
  d["coefficient"] = to_numpy(out.result.c);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Semidiscrete convexification for the 3D Helmholtz coefficient inverse problem";

  // Translators registered later take precedence.
  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::class_<RunConfig>(m, "RunConfig")
      .def_property_readonly("n_h", [](const RunConfig& c) { return c.grid.n_h; })
      .def_property_readonly("n_z", [](const RunConfig& c) { return c.grid.n_z; })
      .def_property_readonly("n_k", [](const RunConfig& c) { return c.grid.n_k; })
      .def_readwrite("delta", &RunConfig::delta)
      .def_readwrite("seed", &RunConfig::seed)
      .def_property("lambda_", [](const RunConfig& c) { return c.solver.lambda; },
                    [](RunConfig& c, double v) { c.solver.lambda = v; })
      .def_property("mu", [](const RunConfig& c) { return c.solver.mu; },
                    [](RunConfig& c, double v) { c.solver.mu = v; })
      .def_property("gamma", [](const RunConfig& c) { return c.solver.gamma; },
                    [](RunConfig& c, double v) { c.solver.gamma = v; })
      .def_property("max_iter", [](const RunConfig& c) { return c.solver.max_iter; },
                    [](RunConfig& c, int v) { c.solver.max_iter = v; })
      .def("to_text", [](const RunConfig& c) { return to_text(c); })
      .def("validate", &RunConfig::validate);

  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));

  m.def("synth", [](const RunConfig& c, const std::filesystem::path& out) {
    py::gil_scoped_release nogil;
    cmd_synth(c, out);
  }, py::arg("config"), py::arg("out_dir"));

  m.def("invert", [](const RunConfig& c, const std::filesystem::path& dataset, const std::filesystem::path& out) {
    InversionOutputs r;
    {
      py::gil_scoped_release nogil;
      r = cmd_invert(c, dataset, out);
    }
    return result_dict(r);
  }, py::arg("config"), py::arg("dataset"), py::arg("out_dir"));

  m.def("run", [](const RunConfig& c) {
    InversionOutputs r;
    {
      py::gil_scoped_release nogil;
      const SynthOutputs s = synthesize(c);
      r = invert(c, s.dataset.noisy);
    }
    return result_dict(r);
  }, py::arg("config"), "Synthesize and invert in memory.");

  m.def("verify", [](const RunConfig& c, const std::filesystem::path& out) {
    std::vector<SuiteResult> rs;
    {
      py::gil_scoped_release nogil;
      rs = cmd_verify(c, out);
    }
    py::list l;
    for (const auto& r : rs) l.append(py::make_tuple(r.name, r.passed, r.details));
    return l;
  }, py::arg("config"), py::arg("out_dir"));

  m.def("report", &cmd_report, py::arg("out_dir"));

  m.def("coefficient_field", [](const RunConfig& c) {
    return to_numpy(coefficient_field(c.scene, c.grid_spec()));
  }, py::arg("config"));

  m.def("laplacian_h", [](const RunConfig& c, py::array_t<cplx> a) {
    return to_numpy(laplacian_h(from_numpy(c.grid_spec(), a)));
  }, py::arg("config"), py::arg("field"));

  m.def("carleman_weight", &weight, py::arg("z"), py::arg("lambda_"));
  m.def("eps_comp", &eps_comp, py::arg("c_comp"), py::arg("c_ref"));
}
