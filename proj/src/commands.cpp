#include "dbf/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/SVD>

namespace dbf {

namespace fs = std::filesystem;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json mode_json(const ModeTable& t, std::size_t i) {
  const Mode& m = t[i];
  json j = {{"index", i},
            {"k", {m.k[0], m.k[1], m.k[2]}},
            {"helicity", to_string(m.helicity)},
            {"eigenvalue", m.eigenvalue}};
  if (m.helicity == Helicity::Const) j["component"] = m.component;
  return j;
}

// Largest |E|, |H| over all samples and kernel modes.
double kernel_sup(const FieldHistory& h) {
  double s = 0.0;
  for (auto m : h.kernel_modes) {
    const auto c = static_cast<Eigen::Index>(m);
    s = std::max({s, h.E.col(c).cwiseAbs().maxCoeff(), h.H.col(c).cwiseAbs().maxCoeff()});
  }
  return s;
}

double min_hypothesis_margin(const GeneralizedScenario& g) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.table->size(); ++i) {
    const CMatrix m = g.kappa0 + (*g.table)[i].eigenvalue * CMatrix::Identity(2, 2);
    Eigen::JacobiSVD<CMatrix> svd(m);
    worst = std::min(worst, svd.singularValues().minCoeff());
  }
  return worst;
}

double residual_tol(const Scenario& s) {
  if (s.method == Method::Exact) return s.tol.resid_tol;
  // Time stepping carries an O(dt^2) quadrature error in the residual.
  return std::max(s.tol.resid_tol, 10.0 * s.grid.dt * s.grid.dt);
}

void report_error(const Error& e, std::ostream& err) { err << "error: " << e.what() << "\n"; }

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RangeViolation:
    case ErrorKind::NotInRange: return 2;
    case ErrorKind::HypothesisViolated: return 3;
    case ErrorKind::NoConvergence:
    case ErrorKind::NotContractive:
    case ErrorKind::NeumannDiverges: return 4;
    default: return 1;
  }
}

std::vector<std::size_t> active_modes(const FieldHistory& h, const Scenario& s) {
  std::vector<bool> on(h.table->size(), false);
  for (const auto& d : s.W0) on[d.mode.resolve(*h.table)] = true;
  for (const auto& d : s.source.targets) on[d.mode.resolve(*h.table)] = true;
  for (std::size_t m = 0; m < on.size(); ++m) {
    const auto c = static_cast<Eigen::Index>(m);
    if (on[m]) continue;
    on[m] = h.E.col(c).cwiseAbs().maxCoeff() > 0.0 || h.H.col(c).cwiseAbs().maxCoeff() > 0.0 ||
            h.D.col(c).cwiseAbs().maxCoeff() > 0.0 || h.B.col(c).cwiseAbs().maxCoeff() > 0.0;
  }
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < on.size(); ++m)
    if (on[m]) out.push_back(m);
  return out;
}

Eigen::VectorXd energy_series(const FieldHistory& h, const Scenario& s) {
  const auto n = h.E.rows();
  Eigen::VectorXd w(n);
  if (!s.generalized()) {
    w = s.epsilon * h.E.cwiseAbs2().rowwise().sum() + s.mu * h.H.cwiseAbs2().rowwise().sum();
    return w;
  }
  const CMatrix& M = s.mstar0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index m = 0; m < h.E.cols(); ++m) {
      const cplx e = h.E(i, m), hh = h.H(i, m);
      const cplx me = M(0, 0) * e + M(0, 1) * hh;
      const cplx mh = M(1, 0) * e + M(1, 1) * hh;
      acc += (std::conj(e) * me + std::conj(hh) * mh).real();
    }
    w(i) = acc;
  }
  return w;
}

double observed_frequency(const CVector& series, const TimeGrid& grid) {
  const std::size_t a = grid.first_nonnegative();
  const std::size_t b = grid.unpadded_end();
  std::vector<double> crossings;
  for (std::size_t i = a; i + 1 < b; ++i) {
    const double y0 = series(static_cast<Eigen::Index>(i)).real();
    const double y1 = series(static_cast<Eigen::Index>(i + 1)).real();
    if (y0 == 0.0 && i > a) continue;  // counted as y1 of the previous interval
    if (y0 == 0.0) {
      crossings.push_back(grid.time(i));
    } else if (y1 == 0.0 || (y0 < 0.0) != (y1 < 0.0)) {
      crossings.push_back(grid.time(i) + grid.dt * y0 / (y0 - y1));
    }
  }
  if (crossings.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return M_PI * static_cast<double>(crossings.size() - 1) / (crossings.back() - crossings.front());
}

void write_history_csv(const std::string& path, const FieldHistory& h,
                       const std::vector<std::size_t>& tracked, const Eigen::VectorXd& energy) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::InvalidArgument, "cannot write '" + path + "'");
  out << "t";
  for (auto m : tracked) {
    for (const char* f : {"e", "h", "d", "b"}) {
      out << ",m" << m << "_" << f << "_re,m" << m << "_" << f << "_im";
    }
  }
  out << ",energy\n";
  for (Eigen::Index i = 0; i < h.E.rows(); ++i) {
    out << fmt17(h.grid.time(static_cast<std::size_t>(i)));
    for (auto m : tracked) {
      const auto c = static_cast<Eigen::Index>(m);
      for (const CMatrix* f : {&h.E, &h.H, &h.D, &h.B}) {
        out << ',' << fmt17((*f)(i, c).real()) << ',' << fmt17((*f)(i, c).imag());
      }
    }
    out << ',' << fmt17(energy(i)) << '\n';
  }
}

RunResult execute(const Scenario& s) {
  auto table = build_basis(s.K);
  RunResult r;
  json verdicts = json::object();
  if (s.generalized()) {
    const auto g = build_generalized(s, table);
    verdicts["hypothesis"] = "satisfied";
    r.history = solve_generalized(g, s.method);
    verdicts["neumann"] = "converges";
  } else {
    const auto d = build_dbf(s, table);
    verdicts["data_range"] = "ok";
    r.history = solve_dbf(d, s.method);
    verdicts["naive_formulation"] = diagnose_naive_formulation(s.epsilon, s.mu, s.eta).verdict;
  }
  const auto& h = r.history;
  r.tracked = active_modes(h, s);
  const Eigen::VectorXd energy = energy_series(h, s);

  const std::size_t a = h.grid.first_nonnegative();
  const std::size_t b = h.grid.unpadded_end();
  double drift = 0.0;
  for (std::size_t i = a; i < b; ++i) drift = std::max(drift, std::abs(energy(static_cast<Eigen::Index>(i)) - energy(static_cast<Eigen::Index>(a))));

  json tracked = json::array();
  for (auto m : r.tracked) tracked.push_back(mode_json(*table, m));
  json kernel = json::array();
  for (auto m : h.kernel_modes) kernel.push_back(mode_json(*table, m));

  const auto& d = h.diag;
  r.diagnostics = {
      {"model", s.model},
      {"method", d.method},
      {"K", s.K},
      {"mode_count", table->size()},
      {"samples", h.grid.n_samples},
      {"residual", d.residual},
      {"initial_value_error", d.initial_value_error},
      {"causality_sup", d.causality_sup},
      {"iterations", d.iterations},
      {"contraction_estimate", d.contraction_estimate},
      {"max_observed_ratio", d.max_observed_ratio},
      {"kernel_modes", kernel},
      {"kernel_sup", kernel_sup(h)},
      {"tracked_modes", tracked},
      {"energy",
       {{"initial", a < b ? energy(static_cast<Eigen::Index>(a)) : 0.0},
        {"final", b > a ? energy(static_cast<Eigen::Index>(b - 1)) : 0.0},
        {"drift", drift}}},
      {"warnings", d.warnings},
      {"verdicts", verdicts},
  };
  if (s.generalized()) {
    r.diagnostics["neumann"] = {{"norm", d.neumann_norm},
                                {"terms", d.neumann_terms},
                                {"deviation", d.neumann_deviation}};
  }
  return r;
}

std::vector<CheckResult> run_checks(const Scenario& s) {
  std::vector<CheckResult> checks;
  auto table = build_basis(s.K);
  auto add = [&](std::string name, double value, double tol, bool pass, std::string note = {}) {
    checks.push_back({std::move(name), value, tol, pass, std::move(note)});
  };

  if (s.generalized()) {
    const auto g = build_generalized(s, table);
    const double margin = min_hypothesis_margin(g);
    add("hypothesis", margin, s.tol.kernel_tol, margin > s.tol.kernel_tol,
        "min sigma_min(kappa0 + lambda)");
    const double q = neumann_norm(g);
    add("neumann", q, 1.0, q < 1.0, "sup |Q0| over the frequency circle");
    if (margin <= s.tol.kernel_tol || q >= 1.0) return checks;
  } else {
    const auto d = build_dbf(s, table);
    const auto rv = check_data_range(s.eta, d.source, d.W0, s.tol);
    add("data_range", rv.worst, s.tol.range_tol, rv.ok, rv.ok ? "" : rv.message);
    if (s.eta != 0.0) {
      // Deterministic probe field plus the initial data.
      SpectralField f = SpectralField::zeros(table);
      std::mt19937 rng(7);
      std::normal_distribution<double> nd;
      for (Eigen::Index i = 0; i < f.coeffs.size(); ++i) f.coeffs(i) = cplx(nd(rng), nd(rng));
      f.coeffs += d.W0.e_part.coeffs + d.W0.h_part.coeffs;
      const double defect = projector_identity_defect(s.eta, f, s.tol.kernel_tol);
      const double scale = std::max(1.0, 1.0 / std::abs(s.eta)) * (1.0 + f.coeffs.cwiseAbs().maxCoeff());
      add("projector_identity", defect, 1e-12 * scale, defect <= 1e-12 * scale);
    }
    if (!rv.ok) return checks;
  }

  const RunResult r = execute(s);
  const auto& dg = r.history.diag;
  const double iv_tol = s.tol.initial_value_tol(s.method, s.grid.dt);
  add("initial_value", dg.initial_value_error, iv_tol, dg.initial_value_error <= iv_tol,
      "|(D,B)(0+) - W0| proxy");
  add("causality", dg.causality_sup, s.tol.caus_tol, dg.causality_sup <= s.tol.caus_tol,
      "sup over t < 0");
  const double rt = residual_tol(s);
  add("evolution_residual", dg.residual, rt, dg.residual <= rt);
  if (!s.generalized()) {
    const double ks = kernel_sup(r.history);
    add("kernel_free", ks, 0.0, ks == 0.0, "kernel coefficients of (E,H)");
  }

  const Scenario zero = without_data(s);
  const RunResult rz = execute(zero);
  const double energy =
      s.generalized() ? uniqueness_energy_probe(rz.history, build_generalized(zero, table))
                      : uniqueness_energy_probe(rz.history, build_dbf(zero, table));
  add("uniqueness", energy, s.tol.energy_tol, energy <= s.tol.energy_tol, "zero-data energy");
  return checks;
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir, bool echo_config,
            std::ostream& out, std::ostream& err) {
  try {
    const Scenario s = load_scenario(scenario_path);
    if (echo_config) out << scenario_to_json(s).dump(2) << "\n";
    const RunResult r = execute(s);
    fs::create_directories(out_dir);
    write_history_csv((fs::path(out_dir) / "history.csv").string(), r.history, r.tracked,
                      energy_series(r.history, s));
    std::ofstream dj(fs::path(out_dir) / "diagnostics.json");
    dj << r.diagnostics.dump(2) << "\n";
    std::ofstream cj(fs::path(out_dir) / "config.json");
    cj << scenario_to_json(s).dump(2) << "\n";
    for (const auto& w : r.history.diag.warnings) err << "warning: " << w << "\n";
    return 0;
  } catch (const Error& e) {
    report_error(e, err);
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_verify(const std::string& scenario_path, std::ostream& out, std::ostream& err) {
  try {
    const Scenario s = load_scenario(scenario_path);
    const auto checks = run_checks(s);
    out << std::left << std::setw(20) << "check" << std::setw(26) << "value" << std::setw(26)
        << "tolerance" << "result\n";
    const CheckResult* first_fail = nullptr;
    for (const auto& c : checks) {
      out << std::setw(20) << c.name << std::setw(26) << fmt17(c.value) << std::setw(26)
          << fmt17(c.tol) << (c.pass ? "PASS" : "FAIL");
      if (!c.note.empty()) out << "  " << c.note;
      out << "\n";
      if (!c.pass && !first_fail) first_fail = &c;
    }
    if (first_fail) {
      err << "verify failed: " << first_fail->name << " (measured " << fmt17(first_fail->value)
          << ", tolerance " << fmt17(first_fail->tol) << ")\n";
      return 1;
    }
    return 0;
  } catch (const Error& e) {
    report_error(e, err);
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

Scenario with_parameter(const Scenario& s, const std::string& param, double value) {
  Scenario v = s;
  if (param == "eta") {
    require(!s.generalized(), ErrorKind::InvalidArgument, "eta sweeps need the classical model");
    v.eta = value;
  } else if (param == "nu") {
    v.nu = value;
  } else if (param == "dt") {
    require(value > 0.0, ErrorKind::InvalidArgument, "dt must be positive");
    const double span = s.grid.dt * static_cast<double>(s.grid.n_samples - 1);
    v.grid.dt = value;
    v.grid.n_samples = static_cast<std::size_t>(std::llround(span / value)) + 1;
    v.grid.t_start = std::round(s.grid.t_start / value) * value;
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown sweep parameter '" + param + "' (eta|nu|dt)");
  }
  return v;
}

int cmd_sweep(const std::string& scenario_path, const std::string& param,
              const std::vector<double>& values, const std::string& out_dir, std::ostream& out,
              std::ostream& err) {
  Scenario base;
  std::vector<std::size_t> tracked;
  try {
    require(param == "eta" || param == "nu" || param == "dt", ErrorKind::InvalidArgument,
            "unknown sweep parameter '" + param + "' (eta|nu|dt)");
    base = load_scenario(scenario_path);
    auto table = build_basis(base.K);
    for (const auto& d : base.W0) tracked.push_back(d.mode.resolve(*table));
    for (const auto& d : base.source.targets) tracked.push_back(d.mode.resolve(*table));
    std::sort(tracked.begin(), tracked.end());
    tracked.erase(std::unique(tracked.begin(), tracked.end()), tracked.end());
    fs::create_directories(out_dir);
  } catch (const Error& e) {
    report_error(e, err);
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  std::ofstream summary(fs::path(out_dir) / "summary.csv");
  summary << "value,status,residual,iv_error,iterations";
  for (auto m : tracked) summary << ",omega_m" << m;
  summary << "\n";

  int successes = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double value = values[i];
    summary << fmt17(value);
    try {
      const Scenario s = with_parameter(base, param, value);
      const RunResult r = execute(s);
      const fs::path dir = fs::path(out_dir) / (param + "_" + std::to_string(i));
      fs::create_directories(dir);
      write_history_csv((dir / "history.csv").string(), r.history, r.tracked,
                        energy_series(r.history, s));
      std::ofstream(dir / "diagnostics.json") << r.diagnostics.dump(2) << "\n";
      const auto& d = r.history.diag;
      summary << ",ok," << fmt17(d.residual) << ',' << fmt17(d.initial_value_error) << ','
              << d.iterations;
      for (auto m : tracked) {
        summary << ',' << fmt17(observed_frequency(r.history.E.col(static_cast<Eigen::Index>(m)),
                                                   r.history.grid));
      }
      summary << "\n";
      ++successes;
    } catch (const Error& e) {
      summary << ',' << to_string(e.kind()) << ",nan,nan,0";
      for (std::size_t k = 0; k < tracked.size(); ++k) summary << ",nan";
      summary << "\n";
      err << param << " = " << fmt17(value) << ": " << e.what() << "\n";
    }
  }
  out << successes << " of " << values.size() << " values succeeded\n";
  return (values.empty() || successes > 0) ? 0 : 1;
}

int cmd_basis(int K, const std::string& out_path, std::ostream& err) {
  try {
    const auto table = build_basis(K);
    std::ofstream out(out_path);
    require(out.good(), ErrorKind::InvalidArgument, "cannot write '" + out_path + "'");
    out << table->to_json().dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    report_error(e, err);
    return exit_code(e.kind());
  }
}

}  // namespace dbf
