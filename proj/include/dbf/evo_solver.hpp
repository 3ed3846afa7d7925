#pragma once

// Solvers for the abstract initial value problem
//
//   d0 M0 U + M1(d0^{-1}) U + A U = F + delta (x) W0
//
// with M0 selfadjoint positive definite and A skew. All time-stepping
// methods start at the grid sample sitting on t = 0, so U vanishes on t < 0
// by construction.

#include <optional>
#include <string>
#include <vector>

#include "dbf/weighted_time.hpp"

namespace dbf {

/// Source given in closed form, F(t) = wf(t) * amplitude.
struct AnalyticForcing {
  Waveform wf;
  CVector amplitude;

  CVector value(double t) const { return wf.value(t) * amplitude; }
  CVector integral(double t) const { return wf.integral(t) * amplitude; }
};

struct AbstractIVP {
  CMatrix M0;
  MaterialSymbol M1;
  CMatrix A;
  WeightedSignal source;
  CVector W0;
  std::optional<AnalyticForcing> forcing;

  AbstractIVP(CMatrix M0, MaterialSymbol M1, CMatrix A, WeightedSignal source, CVector W0,
              std::optional<AnalyticForcing> forcing = std::nullopt);

  /// Source sampled from an analytic forcing (zero source when `forcing` is empty).
  static AbstractIVP with_forcing(CMatrix M0, MaterialSymbol M1, CMatrix A, const TimeGrid& grid,
                                  double nu, CVector W0,
                                  std::optional<AnalyticForcing> forcing = std::nullopt);

  std::size_t dim() const { return static_cast<std::size_t>(M0.rows()); }
  const TimeGrid& grid() const { return source.grid(); }
  /// Smallest eigenvalue of M0.
  double spectral_floor() const;
};

struct SolveReport {
  WeightedSignal solution;
  int iterations = 0;
  double final_residual = 0.0;
  double contraction_estimate = 0.0;
  double nu_used = 0.0;
  double initial_value_error = 0.0;
  std::string method;
  /// |V_{n+1} - V_n|_{nu,0} per Picard sweep (fixed point only).
  std::vector<double> increments;
  /// Largest ratio of consecutive increments above the round-off floor.
  double max_observed_ratio = 0.0;
};

/// Lead-and-memory form  d0 L X + sum_j m_j (d0^{-1})^j X = F + delta (x) W0.
/// The abstract problem maps to L = M0, m_0 = M1_0 + A, m_j = M1_j.
struct DescriptorSystem {
  CMatrix lead;
  std::vector<CMatrix> memory;

  static DescriptorSystem from_ivp(const AbstractIVP& p);
  std::size_t dim() const { return static_cast<std::size_t>(lead.rows()); }
  /// Dimension of the first-order state (X, d0^{-1}X, ...).
  std::size_t state_dim() const;
  /// Generator and input map of the first-order state system Y' = G Y + B F.
  CMatrix generator() const;
  CMatrix input_map() const;
};

/// Samples of chi_{t>=0} exp(-t A') M0^{-1/2} w0, A' = M0^{-1/2} A M0^{-1/2}.
WeightedSignal semigroup_apply(const CMatrix& M0, const CMatrix& A, const CVector& w0,
                               const TimeGrid& grid, double nu);

/// Picard iteration V <- V_base - R S M1 S V in the scaled variable V = M0^{1/2} U,
/// R = (d0 + A')^{-1} realised by the trapezoidal Duhamel rule.
SolveReport solve_fixed_point(const AbstractIVP& p, double nu, int max_iter = 200,
                              double tol = 1e-12);

/// Closed-form solution of the 2x2 block M0 = diag(eps, mu), M1 = c J, A = 0.
WeightedSignal solve_modal_exact(const AbstractIVP& p);

/// State trajectories (rows = grid samples, columns = Y) of a descriptor system.
/// `exact` propagates with matrix exponentials and integrates the analytic forcing by
/// Gauss-Legendre quadrature; otherwise the sampled source is used with the
/// exponential trapezoidal rule.
CMatrix descriptor_trajectory(const DescriptorSystem& sys, const TimeGrid& grid,
                              const CVector& W0, const std::optional<AnalyticForcing>& forcing,
                              const CMatrix* sampled_source, bool exact);

/// Exponential propagation of the polynomial problem (delay symbols are rejected).
SolveReport solve_exact(const AbstractIVP& p);
/// Exponential trapezoidal integrator on the sampled source.
SolveReport solve_integrator(const AbstractIVP& p);

/// Weighted norm of the integrated residual
/// M0 U(t) + int_0^t (M1 U + A U - F) - W0, t >= 0.
double evolution_residual(const AbstractIVP& p, const WeightedSignal& U);

/// |U(0+) - M0^{-1} W0|.
double verify_initial_value(const SolveReport& report, const CMatrix& M0, const CVector& W0);
/// |U - chi_{t>=0} M0^{-1} W0|_{nu,1}; WrongCase unless A = 0.
double verify_regularity_ode(const SolveReport& report, const AbstractIVP& p);
/// sup_{t < t_limit} |U|.
double verify_causality(const SolveReport& report, double t_limit = 0.0);

/// M0^{-1/2} for a Hermitian positive definite matrix.
CMatrix inverse_sqrt_hpd(const CMatrix& M0);
/// Index of the t = 0 sample; GridMisaligned if the grid misses t = 0.
std::size_t require_zero_index(const TimeGrid& grid);

}  // namespace dbf
