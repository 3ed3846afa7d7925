#pragma once

// Batch front end behind the `dbf` executable. Every command returns the
// process exit code: 0 ok, 1 failed check or generic error, 2 range condition,
// 3 hypothesis violated, 4 no convergence.

#include <iosfwd>
#include <string>
#include <vector>

#include "dbf/scenario.hpp"

namespace dbf {

int exit_code(ErrorKind kind);

struct RunResult {
  FieldHistory history;
  std::vector<std::size_t> tracked;  // modes written to the CSV
  json diagnostics;
};

/// Solves the scenario and assembles the diagnostics document.
RunResult execute(const Scenario& s);

/// Modes carrying data or a nonzero field anywhere on the grid.
std::vector<std::size_t> active_modes(const FieldHistory& h, const Scenario& s);

/// eps |e|^2 + mu |h|^2 summed over modes (classical), Re <x, Mstar0 x> (generalized).
Eigen::VectorXd energy_series(const FieldHistory& h, const Scenario& s);

/// Angular frequency from zero crossings of Re(series) on t >= 0 inside the
/// unpadded window: pi (n - 1) / (t_last - t_first). NaN with fewer than 2 crossings.
double observed_frequency(const CVector& series, const TimeGrid& grid);

void write_history_csv(const std::string& path, const FieldHistory& h,
                       const std::vector<std::size_t>& tracked, const Eigen::VectorXd& energy);

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tol = 0.0;
  bool pass = true;
  std::string note;
};

std::vector<CheckResult> run_checks(const Scenario& s);

int cmd_run(const std::string& scenario_path, const std::string& out_dir, bool echo_config,
            std::ostream& out, std::ostream& err);
int cmd_verify(const std::string& scenario_path, std::ostream& out, std::ostream& err);
int cmd_sweep(const std::string& scenario_path, const std::string& param,
              const std::vector<double>& values, const std::string& out_dir, std::ostream& out,
              std::ostream& err);
int cmd_basis(int K, const std::string& out_path, std::ostream& err);

/// Scenario with one swept parameter replaced; dt keeps the window length.
Scenario with_parameter(const Scenario& s, const std::string& param, double value);

}  // namespace dbf
