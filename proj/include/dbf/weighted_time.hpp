#pragma once

// Exponentially weighted time signals, the discrete Fourier-Laplace transform
// and the functional calculus of the inverse time derivative.
//
// A signal u is represented by its samples on a uniform grid; the weighted
// norm is |u|_{nu,0}^2 = int |u(t)|^2 exp(-2 nu t) dt, approximated by the
// rectangle rule. The transform is realised by an FFT of exp(-nu t) u(t) on the
// window, which is treated as one period; the zero-padded tail keeps the
// periodic wrap-around of causal tails negligible.

#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dbf/errors.hpp"

namespace dbf {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

struct TimeGrid {
  double t_start = 0.0;
  double dt = 1.0;
  std::size_t n_samples = 2;
  double pad_fraction = 0.5;

  void validate() const;

  double time(std::size_t i) const { return t_start + dt * static_cast<double>(i); }
  double t_end() const { return time(n_samples - 1); }

  /// Number of trailing samples reserved as zero padding.
  std::size_t pad_samples() const;
  /// First index of the padded tail.
  std::size_t unpadded_end() const { return n_samples - pad_samples(); }

  /// Index of the sample sitting exactly at t = 0, if the grid is aligned.
  std::optional<std::size_t> zero_index() const;
  /// First index with t >= 0 (n_samples if none).
  std::size_t first_nonnegative() const;

  /// Angular frequencies of the DFT bins, in FFT order.
  std::vector<double> frequencies() const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Sampled element of H_{nu,0}(R, C^channels); row i holds the value at grid.time(i).
class WeightedSignal {
 public:
  WeightedSignal(TimeGrid grid, double nu, CMatrix samples);

  static WeightedSignal zeros(const TimeGrid& grid, double nu, std::size_t channels);

  template <class F>
  static WeightedSignal sampled(const TimeGrid& grid, double nu, std::size_t channels, F&& f) {
    CMatrix s(grid.n_samples, static_cast<Eigen::Index>(channels));
    for (std::size_t i = 0; i < grid.n_samples; ++i) {
      s.row(static_cast<Eigen::Index>(i)) = f(grid.time(i)).transpose();
    }
    return WeightedSignal(grid, nu, std::move(s));
  }

  const TimeGrid& grid() const { return grid_; }
  double nu() const { return nu_; }
  std::size_t channels() const { return static_cast<std::size_t>(samples_.cols()); }
  const CMatrix& samples() const { return samples_; }

  WeightedSignal with_samples(CMatrix samples) const { return {grid_, nu_, std::move(samples)}; }
  WeightedSignal with_nu(double nu) const { return {grid_, nu, samples_}; }

  /// Largest sample magnitude over all channels.
  double sup_norm() const;
  /// Largest magnitude over samples with t < t_limit.
  double sup_norm_before(double t_limit) const;

 private:
  TimeGrid grid_;
  double nu_;
  CMatrix samples_;
};

/// Values of L_nu u at the DFT angular frequencies (FFT order).
class Spectrum {
 public:
  Spectrum(TimeGrid grid, double nu, CMatrix samples);

  const TimeGrid& grid() const { return grid_; }
  double nu() const { return nu_; }
  const CMatrix& samples() const { return samples_; }
  std::vector<double> frequencies() const { return grid_.frequencies(); }

  /// sqrt(d_omega * sum |S|^2); equals the weighted norm of the source signal.
  double l2_norm() const;

 private:
  TimeGrid grid_;
  double nu_;
  CMatrix samples_;
};

struct DelayTerm {
  double h;       // seconds, must be <= 0
  CMatrix coeff;  // dim x dim
};

/// z -> sum_j poly[j] z^j + sum_d coeff_d exp(h_d / z), bounded analytic on B(r, r).
class MaterialSymbol {
 public:
  MaterialSymbol(std::size_t dim, std::vector<CMatrix> poly, std::vector<DelayTerm> delays = {},
                 double radius = std::numeric_limits<double>::infinity());

  static MaterialSymbol zero(std::size_t dim);
  static MaterialSymbol constant(const CMatrix& m);
  static MaterialSymbol identity(std::size_t dim);
  static MaterialSymbol integrator(std::size_t dim);
  static MaterialSymbol delay(std::size_t dim, double h);

  std::size_t dim() const { return dim_; }
  const std::vector<CMatrix>& poly() const { return poly_; }
  const std::vector<DelayTerm>& delays() const { return delays_; }
  double radius() const { return radius_; }

  bool is_zero() const;
  bool is_constant() const;

  /// M(z) for z != 0. Delay factors use exp(h / z).
  CMatrix evaluate(cplx z) const;
  /// M(1 / (i omega + nu)); delay factors are evaluated as exp(h (i omega + nu)).
  CMatrix at_frequency(double omega, double nu) const;
  /// Value of the symbol as z -> 0 along the circle |z - 1/(2nu)| = 1/(2nu) with
  /// delays switched off (their contribution vanishes at t = 0+ for causal inputs).
  CMatrix at_origin() const;

  /// Sampled supremum of the spectral norm over the circle z = 1/(i omega + nu).
  double sup_norm(double nu, int n_theta = 4096) const;

  /// Smallest admissible weight: nu must exceed 1 / (2 r).
  double nu_threshold() const { return 1.0 / (2.0 * radius_); }

  MaterialSymbol operator+(const MaterialSymbol& other) const;
  MaterialSymbol scaled(cplx s) const;

 private:
  std::size_t dim_;
  std::vector<CMatrix> poly_;
  std::vector<DelayTerm> delays_;
  double radius_;
};

/// Scalar source profile in time, zero on t < 0.
struct Waveform {
  enum class Kind { None, Step, Gaussian, DelayedStep };

  Kind kind = Kind::None;
  double amplitude = 1.0;
  double t0 = 0.0;     // gaussian centre or step onset
  double width = 1.0;  // gaussian standard deviation

  double value(double t) const;
  /// int_0^t value(s) ds.
  double integral(double t) const;
  /// Points where the profile is not smooth (inside [0, inf)).
  std::vector<double> breakpoints() const;
  bool is_zero() const { return kind == Kind::None || amplitude == 0.0; }
};

Spectrum laplace_forward(const WeightedSignal& u);
WeightedSignal laplace_inverse(const Spectrum& s);

/// Causal running integral by the cumulative trapezoid rule; the signal is
/// taken as zero before the window start.
WeightedSignal apply_inverse_derivative(const WeightedSignal& u);
/// Same operator realised in the frequency domain by division by (i omega + nu).
WeightedSignal apply_inverse_derivative_spectral(const WeightedSignal& u);

/// M(d0^{-1}) u through the transform.
WeightedSignal apply_symbol(const MaterialSymbol& m, const WeightedSignal& u);
/// M(d0^{-1}) u in the time domain (repeated trapezoid integration and
/// interpolated shifts); exactly causal relative to `origin`.
WeightedSignal apply_symbol_causal(const MaterialSymbol& m, const WeightedSignal& u,
                                   std::size_t origin = 0);

/// |d0^k u|_{nu,0} for k in {-2, ..., 2}.
double weighted_norm(const WeightedSignal& u, int k);

/// Sup-norm deviation between M(d0^{-1}) u evaluated at two weights, over the
/// unpadded window.
double check_nu_independence(const MaterialSymbol& m, const WeightedSignal& u_smooth, double nu1,
                             double nu2);

// Column-wise kernels shared with the solvers. Rows are time samples.

/// out[i] = int_{t[origin]}^{t[i]} f, zero for i <= origin.
CMatrix cumulative_trapezoid(const CMatrix& f, double dt, std::size_t origin = 0);
/// Fourth-order cumulative integral (piecewise cubic), zero for i <= origin.
CMatrix cumulative_integral4(const CMatrix& f, double dt, std::size_t origin = 0);
/// out[i] = f(t[i] + h) for h <= 0, linear interpolation, zero before `origin`.
CMatrix shift_causal(const CMatrix& f, double dt, double h, std::size_t origin = 0);
/// M applied row-wise: out.row(i) = (M f.row(i)^T)^T.
CMatrix apply_matrix_rows(const CMatrix& m, const CMatrix& f);
/// Discrete |.|_{nu,0} of a sample block on a grid.
double weighted_l2(const CMatrix& f, const TimeGrid& grid, double nu);

/// One-sided trace U(0+) from the first two samples with t >= 0 by linear
/// (Richardson) extrapolation; exact when t = 0 lies on the grid.
CVector right_limit_at_zero(const CMatrix& samples, const TimeGrid& grid);

}  // namespace dbf
