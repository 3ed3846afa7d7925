#pragma once

// Drude-Born-Fedorov media on the torus.
//
//   d0 (D, B) + [[0, -curl], [curl, 0]] (E, H) = J + delta (x) W0,
//   (D, B) = (1 + eta curl) diag(eps, mu) (E, H)
//
// is reduced mode by mode to  diag(eps, mu) d0 (e, h) + c_lambda J (e, h) = ...
// with c_lambda = lambda / (1 + eta lambda), after dividing the data by
// (1 + eta lambda). Modes in the kernel of 1 + eta curl carry no field.

#include <optional>
#include <string>
#include <vector>

#include "dbf/curl_spectral.hpp"
#include "dbf/evo_solver.hpp"

namespace dbf {

enum class Method { Exact, FixedPoint, Integrator };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct Tolerances {
  double kernel_tol = 1e-9;
  double near_kernel = 1e-3;
  double range_tol = 1e-12;
  double iv_tol = -1.0;  // < 0: 1e-8 for the exact method, 10 dt otherwise
  double caus_tol = 1e-10;
  double resid_tol = 1e-6;
  double fp_tol = 1e-12;
  int max_iter = 200;
  double neumann_tol = 1e-12;
  int neumann_max_terms = 200;
  double energy_tol = 1e-12;

  double initial_value_tol(Method m, double dt) const;
  friend bool operator==(const Tolerances&, const Tolerances&) = default;
};

/// J(t) = wf(t) * amplitude, amplitude given per mode for both field parts.
struct ModalSource {
  Waveform wf;
  FieldPair amplitude;

  static ModalSource none(const ModeTablePtr& table);
  bool is_zero() const;
};

struct DBFScenario {
  double epsilon = 1.0;
  double mu = 1.0;
  double eta = 0.5;
  double nu = 1.0;
  ModeTablePtr table;
  TimeGrid grid;
  ModalSource source;
  FieldPair W0;
  Tolerances tol;
};

struct GeneralizedScenario {
  ModeTablePtr table;
  TimeGrid grid;
  double nu = 1.0;
  CMatrix kappa0;         // 2x2 on the (E, H) pair
  MaterialSymbol kappa1;  // dim 2, polynomial
  CMatrix mstar0;         // 2x2
  MaterialSymbol mstar1;  // dim 2, polynomial
  std::optional<Eigen::Vector3d> k_cross;
  double cross_scale = 1.0;  // Mstar1 += cross_scale * (k_cross x) on both parts
  ModalSource source;
  FieldPair W0;
  Tolerances tol;
};

struct Diagnostics {
  double residual = 0.0;
  double initial_value_error = 0.0;
  double causality_sup = 0.0;
  int iterations = 0;
  double contraction_estimate = 0.0;
  double max_observed_ratio = 0.0;
  double neumann_norm = 0.0;
  int neumann_terms = 0;
  double neumann_deviation = 0.0;
  std::string method;
  std::vector<std::string> warnings;
};

/// Coefficient time series, rows = grid samples, columns = modes.
struct FieldHistory {
  TimeGrid grid;
  double nu = 1.0;
  ModeTablePtr table;
  CMatrix E, H, D, B;
  std::vector<std::size_t> kernel_modes;
  Diagnostics diag;

  static FieldHistory zeros(const TimeGrid& grid, double nu, ModeTablePtr table);
  /// Snapshot of (E, H) or (D, B) at sample i.
  FieldPair eh_at(std::size_t i) const;
  FieldPair db_at(std::size_t i) const;
};

struct NaiveDiagnosis {
  std::vector<CMatrix> coefficients;  // Taylor coefficients of the symbol at z = 0
  CMatrix z1_real_part;               // selfadjoint part of the z^1 coefficient
  bool degenerate = false;
  std::string verdict;
};

/// Taylor coefficients z^0..z^2 of the material law obtained by eliminating
/// (E, H) from the DBF relation, computed by a Cauchy integral.
NaiveDiagnosis diagnose_naive_formulation(double epsilon, double mu, double eta);
/// The formal symbol itself, (1 + w^2)^{-1} [[w^2, -w], [w, w^2]], w = z / (eta sqrt(eps mu)).
CMatrix naive_symbol(double epsilon, double mu, double eta, cplx z);

struct RangeVerdict {
  bool ok = true;
  std::vector<std::size_t> offending;
  double worst = 0.0;
  std::string message;
};

RangeVerdict check_data_range(double eta, const ModalSource& source, const FieldPair& W0,
                              const Tolerances& tol = {});

struct ReducedBlock {
  std::size_t mode;
  double lambda;
  double coupling;  // c_lambda
  AbstractIVP ivp;
};

/// One 2x2 problem per non-kernel mode; RangeViolation if the data are not in range.
std::vector<ReducedBlock> assemble_reduced_ivp(const DBFScenario& s);

FieldHistory solve_dbf(const DBFScenario& s, Method method);

/// (D, B) = (1 + eta lambda) (eps E, mu H) per mode.
FieldPair recover_DB(const FieldPair& eh, const DBFScenario& s);
void recover_DB(FieldHistory& h, const DBFScenario& s);

/// Weighted H_{-1} proxy norm of the integrated Maxwell residual,
/// (D, B)(t) + int_0^t [(-lambda H, lambda E) - J] - W0, over t >= 0.
double maxwell_residual(const FieldHistory& h, const ModalSource& source, const FieldPair& W0);
/// |(D, B)(0+) - W0| in the proxy norm (weights (1 + lambda^2)^{-1/2}).
double initial_value_proxy(const FieldHistory& h, const FieldPair& W0);
double causality_sup(const FieldHistory& h);

double verify_dbf_equation(const FieldHistory& h, const DBFScenario& s);

/// nu <P u | diag(eps, mu) P u>_{nu,0} plus sup of the kernel coefficients.
double uniqueness_energy_probe(const FieldHistory& h, const DBFScenario& s);

/// Largest deviation in (1 - P) curl = -eta^{-1} (1 - P) and P curl = curl P on f.
double projector_identity_defect(double eta, const SpectralField& f, double kernel_tol = 1e-9);

// Generalized material law (D, B) = (kappa(z) + curl) Mstar(z) (E, H).

/// Sup over the frequency circle of |(kappa0 + lambda)^{-1} z kappa1(z)|, worst mode.
double neumann_norm(const GeneralizedScenario& g);
FieldHistory solve_generalized(const GeneralizedScenario& g, Method method);
/// The classical scenario written in generalized form: kappa0 = 1/eta, Mstar0 = eta diag(eps, mu).
GeneralizedScenario as_generalized(const DBFScenario& s);
double uniqueness_energy_probe(const FieldHistory& h, const GeneralizedScenario& g);

}  // namespace dbf
