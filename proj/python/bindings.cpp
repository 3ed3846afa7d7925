#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dbf/commands.hpp"
#include "dbf/dbf_model.hpp"
#include "dbf/scenario.hpp"

namespace py = pybind11;
using namespace dbf;

namespace {

WeightedSignal signal_of(const CMatrix& samples, double t_start, double dt, double nu, double pad) {
  const TimeGrid g{t_start, dt, static_cast<std::size_t>(samples.rows()), pad};
  return WeightedSignal(g, nu, samples);
}

py::dict run_scenario(const std::string& doc) {
  const auto s = parse_scenario(json::parse(doc));
  RunResult r;
  {
    py::gil_scoped_release release;
    r = execute(s);
  }
  const auto& h = r.history;
  Eigen::VectorXd t(static_cast<Eigen::Index>(h.grid.n_samples));
  for (std::size_t i = 0; i < h.grid.n_samples; ++i) t(static_cast<Eigen::Index>(i)) = h.grid.time(i);
  py::dict out;
  out["t"] = t;
  out["E"] = h.E;
  out["H"] = h.H;
  out["D"] = h.D;
  out["B"] = h.B;
  out["eigenvalues"] = h.table->eigenvalues();
  out["kernel_modes"] = h.kernel_modes;
  out["tracked_modes"] = r.tracked;
  out["energy"] = energy_series(h, s);
  out["diagnostics"] = r.diagnostics.dump();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the dbf_core solver library";

  static py::exception<Error> error(m, "DbfError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object args = py::make_tuple(std::string(to_string(e.kind())), e.what());
      PyErr_SetObject(error.ptr(), args.ptr());
    } catch (const json::exception& e) {
      py::object args = py::make_tuple(std::string("Schema"), e.what());
      PyErr_SetObject(error.ptr(), args.ptr());
    }
  });

  m.def("run", &run_scenario, py::arg("scenario_json"),
        "Solve a scenario document; arrays are samples x modes.");

  m.def(
      "verify",
      [](const std::string& doc) {
        const auto s = parse_scenario(json::parse(doc));
        std::vector<CheckResult> checks;
        {
          py::gil_scoped_release release;
          checks = run_checks(s);
        }
        py::list out;
        for (const auto& c : checks) {
          py::dict d;
          d["name"] = c.name;
          d["value"] = c.value;
          d["tol"] = c.tol;
          d["pass"] = c.pass;
          d["note"] = c.note;
          out.append(d);
        }
        return out;
      },
      py::arg("scenario_json"));

  m.def("canonical_scenario", [](const std::string& doc) { return scenario_to_json(parse_scenario(json::parse(doc))).dump(); },
        py::arg("scenario_json"));

  m.def("basis", [](int K) { return build_basis(K)->to_json().dump(); }, py::arg("K"));

  m.def("kernel_modes", [](int K, double eta) { return build_basis(K)->kernel_modes(eta); }, py::arg("K"),
        py::arg("eta"));

  m.def("generator_norm", [](int K, double eta) { return generator_norm(eta, *build_basis(K)); }, py::arg("K"),
        py::arg("eta"));

  m.def(
      "diagnose_naive_formulation",
      [](double epsilon, double mu, double eta) {
        const auto d = diagnose_naive_formulation(epsilon, mu, eta);
        py::dict out;
        out["coefficients"] = d.coefficients;
        out["z1_real_part"] = d.z1_real_part;
        out["degenerate"] = d.degenerate;
        out["verdict"] = d.verdict;
        return out;
      },
      py::arg("epsilon"), py::arg("mu"), py::arg("eta"));

  m.def(
      "inverse_derivative",
      [](const CMatrix& samples, double t_start, double dt, double nu, double pad) {
        return apply_inverse_derivative(signal_of(samples, t_start, dt, nu, pad)).samples();
      },
      py::arg("samples"), py::arg("t_start"), py::arg("dt"), py::arg("nu"), py::arg("pad_fraction") = 0.5);

  m.def(
      "delay",
      [](const CMatrix& samples, double t_start, double dt, double nu, double h, double pad) {
        const auto u = signal_of(samples, t_start, dt, nu, pad);
        return apply_symbol(MaterialSymbol::delay(static_cast<std::size_t>(samples.cols()), h), u).samples();
      },
      py::arg("samples"), py::arg("t_start"), py::arg("dt"), py::arg("nu"), py::arg("h"),
      py::arg("pad_fraction") = 0.5);

  m.def(
      "weighted_norm",
      [](const CMatrix& samples, double t_start, double dt, double nu, int k, double pad) {
        return weighted_norm(signal_of(samples, t_start, dt, nu, pad), k);
      },
      py::arg("samples"), py::arg("t_start"), py::arg("dt"), py::arg("nu"), py::arg("k") = 0,
      py::arg("pad_fraction") = 0.5);
}
