#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "difffactor/certificate.hpp"
#include "difffactor/errors.hpp"
#include "difffactor/fiber_decompose.hpp"
#include "difffactor/herman.hpp"
#include "difffactor/json_io.hpp"
#include "difffactor/lie_ngates.hpp"
#include "difffactor/pipeline.hpp"

namespace py = pybind11;
using namespace difffactor;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const PeriodicField& f) {
  const auto n = py::ssize_t(f.grid());
  Array out = f.dimension() == 1 ? Array({n}) : Array({n, n});
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

PeriodicField from_array(const Array& a, int dimension) {
  if (a.ndim() != dimension) throw InvalidArgument("expected a " + std::to_string(dimension) + "D array");
  const int n = int(a.shape(0));
  if (dimension == 2 && a.shape(1) != n) throw InvalidArgument("expected a square array");
  return PeriodicField(dimension, n, std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict report_dict(const VerificationReport& r) {
  py::dict d;
  d["pass"] = r.pass;
  d["residual"] = r.residual;
  d["tolerance"] = r.tolerance;
  d["commutators"] = r.commutators;
  py::list checks;
  for (const auto& c : r.checks) {
    py::dict e;
    e["name"] = c.name;
    e["pass"] = c.pass;
    e["detail"] = c.detail;
    checks.append(e);
  }
  d["checks"] = checks;
  return d;
}

PipelineConfig make_config(const std::string& cover, const std::string& alpha, double tolerance, double eps) {
  PipelineConfig c;
  c.set_cover(cover);
  c.alpha = alpha;
  c.tolerance = tolerance;
  c.eps = eps;
  return c;
}

}  // namespace

PYBIND11_MODULE(_difffactor, m) {
  m.doc() = "Commutator factorization of torus diffeomorphisms";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<BasinError>(m, "BasinError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());

  py::class_<TorusDiffeo>(m, "TorusDiffeo")
      .def(py::init([](const Array& u, const Array& w) { return TorusDiffeo(from_array(u, 2), from_array(w, 2)); }),
           py::arg("u"), py::arg("w"))
      .def_property_readonly("grid", &TorusDiffeo::grid)
      .def_property_readonly("u", [](const TorusDiffeo& f) { return to_array(f.u()); })
      .def_property_readonly("w", [](const TorusDiffeo& f) { return to_array(f.w()); })
      .def("to_json", [](const TorusDiffeo& f) { return dump_json(torus_to_json(f)); })
      .def_static("from_json", [](const std::string& s) { return torus_from_json(parse_json(s, "torus diffeo")); })
      .def("digest", &input_digest);

  m.def("generate_random_diffeo", &generate_random_diffeo, py::arg("seed"), py::arg("amplitude") = 0.02,
        py::arg("max_mode") = 4, py::arg("grid") = 256);

  m.def(
      "decompose",
      [](const TorusDiffeo& f, double tolerance, int max_iterations) {
        DecomposeOptions o;
        o.tolerance = tolerance;
        o.max_iterations = max_iterations;
        auto d = decompose(f, o);
        py::dict out;
        out["f1"] = to_array(d.f1.displacement());
        out["f2"] = to_array(d.f2.displacement());
        out["iterations"] = d.report.iterations;
        py::list hist;
        for (auto r : d.report.history) hist.append(py::make_tuple(r.c0, r.c1));
        out["history"] = hist;
        return out;
      },
      py::arg("f"), py::arg("tolerance") = 1e-9, py::arg("max_iterations") = 40,
      "f = f1 o f2; returns the fiber displacements of both factors.");

  m.def(
      "factor",
      [](const TorusDiffeo& f, const std::string& cover, const std::string& alpha, double tolerance, double eps) {
        auto c = full_factorization(f, make_config(cover, alpha, tolerance, eps));
        py::dict out;
        out["certificate"] = certificate_to_json(c);
        out["commutators"] = c.commutator_count;
        out["bound"] = c.bound.value;
        out["residual"] = c.residual;
        out["status"] = c.status;
        return out;
      },
      py::arg("f"), py::arg("cover") = "global", py::arg("alpha") = "golden", py::arg("tolerance") = 1e-6,
      py::arg("eps") = 0.1, "Full pipeline; the certificate is returned as JSON text.");

  m.def(
      "verify",
      [](const std::string& certificate, const TorusDiffeo& f, double tolerance) {
        return report_dict(verify_certificate(certificate_from_json(certificate), f, tolerance));
      },
      py::arg("certificate"), py::arg("f"), py::arg("tolerance") = 1e-6);

  m.def(
      "solve_cohomological",
      [](const Array& psi, const std::string& alpha) {
        auto sol = solve_cohomological(from_array(psi, 1), DiophantineRotation::parse(alpha));
        return py::make_tuple(to_array(sol.s), sol.mean);
      },
      py::arg("psi"), py::arg("alpha") = "golden", "s o R_alpha - s = psi - mean(psi); returns (s, mean).");

  m.def(
      "bounds",
      [](const std::string& name) {
        auto b = commutator_bound(name);
        py::dict out;
        out["value"] = b.value;
        out["C"] = b.C;
        out["N"] = b.N;
        out["trace"] = b.trace;
        return out;
      },
      py::arg("name"));

  m.def(
      "n_lower",
      [](const std::string& algebra, int cap, int trials, std::uint64_t seed) -> std::optional<int> {
        return n_lower_search(FiniteLieAlgebra::builtin(algebra), cap, trials, seed).n;
      },
      py::arg("algebra"), py::arg("cap") = 6, py::arg("trials") = 5, py::arg("seed") = 0,
      "Smallest N with K_Y onto, or None up to the cap.");
}
