#include "dbf/weighted_time.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

namespace dbf {

namespace {

constexpr double kAlignTol = 1e-9;

double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

// Column-wise forward DFT (unscaled) of a sample block.
CMatrix fft_columns(const CMatrix& x) {
  Eigen::FFT<double> fft;
  const auto n = static_cast<std::size_t>(x.rows());
  CMatrix out(x.rows(), x.cols());
  std::vector<cplx> in(n), res(n);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) in[i] = x(static_cast<Eigen::Index>(i), c);
    fft.fwd(res, in);
    for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i), c) = res[i];
  }
  return out;
}

// Column-wise inverse DFT including the 1/n factor.
CMatrix ifft_columns(const CMatrix& x) {
  Eigen::FFT<double> fft;
  const auto n = static_cast<std::size_t>(x.rows());
  CMatrix out(x.rows(), x.cols());
  std::vector<cplx> in(n), res(n);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) in[i] = x(static_cast<Eigen::Index>(i), c);
    fft.inv(res, in);
    for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i), c) = res[i];
  }
  return out;
}

void check_nu(double nu) {
  require(std::isfinite(nu) && nu > 0.0, ErrorKind::InvalidArgument,
          "weight nu must be positive, got " + std::to_string(nu));
}

}  // namespace

// ---------------------------------------------------------------- TimeGrid

void TimeGrid::validate() const {
  require(dt > 0.0 && std::isfinite(dt), ErrorKind::InvalidArgument, "dt must be positive");
  require(n_samples >= 2, ErrorKind::InvalidArgument, "n_samples must be at least 2");
  require(pad_fraction >= 0.0 && pad_fraction < 1.0, ErrorKind::InvalidArgument,
          "pad_fraction must lie in [0, 1)");
  require(std::isfinite(t_start), ErrorKind::InvalidArgument, "t_start must be finite");
}

std::size_t TimeGrid::pad_samples() const {
  return static_cast<std::size_t>(std::floor(pad_fraction * static_cast<double>(n_samples)));
}

std::optional<std::size_t> TimeGrid::zero_index() const {
  const double pos = -t_start / dt;
  const double r = std::round(pos);
  if (std::abs(pos - r) > kAlignTol || r < 0.0 || r >= static_cast<double>(n_samples)) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(r);
}

std::size_t TimeGrid::first_nonnegative() const {
  if (auto z = zero_index()) return *z;
  const double pos = std::ceil(-t_start / dt);
  if (pos <= 0.0) return 0;
  return std::min(n_samples, static_cast<std::size_t>(pos));
}

std::vector<double> TimeGrid::frequencies() const {
  std::vector<double> w(n_samples);
  const auto n = static_cast<long long>(n_samples);
  const double base = 2.0 * std::numbers::pi / (static_cast<double>(n_samples) * dt);
  for (long long m = 0; m < n; ++m) {
    const long long k = (2 * m < n) ? m : m - n;
    w[static_cast<std::size_t>(m)] = base * static_cast<double>(k);
  }
  return w;
}

// ---------------------------------------------------------- WeightedSignal

WeightedSignal::WeightedSignal(TimeGrid grid, double nu, CMatrix samples)
    : grid_(grid), nu_(nu), samples_(std::move(samples)) {
  grid_.validate();
  check_nu(nu_);
  require(static_cast<std::size_t>(samples_.rows()) == grid_.n_samples,
          ErrorKind::InvalidArgument, "sample count does not match grid");
  require(samples_.cols() >= 1, ErrorKind::InvalidArgument, "signal needs at least one channel");
}

WeightedSignal WeightedSignal::zeros(const TimeGrid& grid, double nu, std::size_t channels) {
  return {grid, nu, CMatrix::Zero(static_cast<Eigen::Index>(grid.n_samples),
                                  static_cast<Eigen::Index>(channels))};
}

double WeightedSignal::sup_norm() const {
  return samples_.size() == 0 ? 0.0 : samples_.cwiseAbs().maxCoeff();
}

double WeightedSignal::sup_norm_before(double t_limit) const {
  double s = 0.0;
  for (std::size_t i = 0; i < grid_.n_samples && grid_.time(i) < t_limit; ++i) {
    s = std::max(s, samples_.row(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff());
  }
  return s;
}

// ---------------------------------------------------------------- Spectrum

Spectrum::Spectrum(TimeGrid grid, double nu, CMatrix samples)
    : grid_(grid), nu_(nu), samples_(std::move(samples)) {
  require(static_cast<std::size_t>(samples_.rows()) == grid_.n_samples,
          ErrorKind::InvalidArgument, "spectrum size does not match grid");
}

double Spectrum::l2_norm() const {
  const double dw = 2.0 * std::numbers::pi / (static_cast<double>(grid_.n_samples) * grid_.dt);
  return std::sqrt(dw * samples_.squaredNorm());
}

// ---------------------------------------------------------- MaterialSymbol

MaterialSymbol::MaterialSymbol(std::size_t dim, std::vector<CMatrix> poly,
                               std::vector<DelayTerm> delays, double radius)
    : dim_(dim), poly_(std::move(poly)), delays_(std::move(delays)), radius_(radius) {
  require(dim_ >= 1, ErrorKind::InvalidArgument, "symbol dimension must be positive");
  require(radius_ > 0.0, ErrorKind::InvalidArgument, "symbol radius must be positive");
  const auto d = static_cast<Eigen::Index>(dim_);
  for (const auto& c : poly_) {
    require(c.rows() == d && c.cols() == d, ErrorKind::InvalidArgument,
            "polynomial coefficient has wrong shape");
  }
  for (const auto& term : delays_) {
    require(term.h <= 0.0, ErrorKind::InvalidArgument,
            "delay offsets must satisfy h <= 0 (anticausal shifts are not admitted)");
    require(term.coeff.rows() == d && term.coeff.cols() == d, ErrorKind::InvalidArgument,
            "delay coefficient has wrong shape");
  }
}

MaterialSymbol MaterialSymbol::zero(std::size_t dim) { return MaterialSymbol(dim, {}); }

MaterialSymbol MaterialSymbol::constant(const CMatrix& m) {
  return MaterialSymbol(static_cast<std::size_t>(m.rows()), {m});
}

MaterialSymbol MaterialSymbol::identity(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return MaterialSymbol(dim, {CMatrix::Identity(d, d)});
}

MaterialSymbol MaterialSymbol::integrator(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return MaterialSymbol(dim, {CMatrix::Zero(d, d), CMatrix::Identity(d, d)});
}

MaterialSymbol MaterialSymbol::delay(std::size_t dim, double h) {
  const auto d = static_cast<Eigen::Index>(dim);
  return MaterialSymbol(dim, {}, {DelayTerm{h, CMatrix::Identity(d, d)}});
}

bool MaterialSymbol::is_zero() const {
  for (const auto& c : poly_) {
    if (c.cwiseAbs().maxCoeff() != 0.0) return false;
  }
  for (const auto& t : delays_) {
    if (t.coeff.cwiseAbs().maxCoeff() != 0.0) return false;
  }
  return true;
}

bool MaterialSymbol::is_constant() const {
  for (std::size_t j = 1; j < poly_.size(); ++j) {
    if (poly_[j].cwiseAbs().maxCoeff() != 0.0) return false;
  }
  for (const auto& t : delays_) {
    if (t.coeff.cwiseAbs().maxCoeff() != 0.0) return false;
  }
  return true;
}

CMatrix MaterialSymbol::evaluate(cplx z) const {
  const auto d = static_cast<Eigen::Index>(dim_);
  CMatrix out = CMatrix::Zero(d, d);
  cplx zp = 1.0;
  for (const auto& c : poly_) {
    out += zp * c;
    zp *= z;
  }
  if (!delays_.empty()) {
    require(z != cplx(0.0), ErrorKind::InvalidArgument, "delay symbol is not defined at z = 0");
    for (const auto& t : delays_) out += std::exp(t.h / z) * t.coeff;
  }
  return out;
}

CMatrix MaterialSymbol::at_frequency(double omega, double nu) const {
  const auto d = static_cast<Eigen::Index>(dim_);
  const cplx s{nu, omega};
  const cplx z = 1.0 / s;
  CMatrix out = CMatrix::Zero(d, d);
  cplx zp = 1.0;
  for (const auto& c : poly_) {
    out += zp * c;
    zp *= z;
  }
  for (const auto& t : delays_) out += std::exp(t.h * s) * t.coeff;
  return out;
}

CMatrix MaterialSymbol::at_origin() const {
  const auto d = static_cast<Eigen::Index>(dim_);
  return poly_.empty() ? CMatrix(CMatrix::Zero(d, d)) : poly_.front();
}

double MaterialSymbol::sup_norm(double nu, int n_theta) const {
  double best = spectral_norm(at_frequency(0.0, nu));
  for (int k = 0; k < n_theta; ++k) {
    const double theta =
        -std::numbers::pi + (k + 0.5) * 2.0 * std::numbers::pi / static_cast<double>(n_theta);
    const double omega = nu * std::tan(0.5 * theta);
    best = std::max(best, spectral_norm(at_frequency(omega, nu)));
  }
  // z -> 0 limit of the polynomial part (delay factors keep modulus exp(h nu)).
  if (delays_.empty()) best = std::max(best, spectral_norm(at_origin()));
  return best;
}

MaterialSymbol MaterialSymbol::operator+(const MaterialSymbol& other) const {
  require(dim_ == other.dim_, ErrorKind::InvalidArgument, "symbol dimensions differ");
  const auto d = static_cast<Eigen::Index>(dim_);
  std::vector<CMatrix> poly(std::max(poly_.size(), other.poly_.size()), CMatrix::Zero(d, d));
  for (std::size_t j = 0; j < poly_.size(); ++j) poly[j] += poly_[j];
  for (std::size_t j = 0; j < other.poly_.size(); ++j) poly[j] += other.poly_[j];
  auto delays = delays_;
  delays.insert(delays.end(), other.delays_.begin(), other.delays_.end());
  return MaterialSymbol(dim_, std::move(poly), std::move(delays), std::min(radius_, other.radius_));
}

MaterialSymbol MaterialSymbol::scaled(cplx s) const {
  auto poly = poly_;
  for (auto& c : poly) c *= s;
  auto delays = delays_;
  for (auto& t : delays) t.coeff *= s;
  return MaterialSymbol(dim_, std::move(poly), std::move(delays), radius_);
}

// ---------------------------------------------------------------- Waveform

double Waveform::value(double t) const {
  switch (kind) {
    case Kind::None: return 0.0;
    case Kind::Step: return t >= 0.0 ? amplitude : 0.0;
    case Kind::DelayedStep: return (t >= t0 && t >= 0.0) ? amplitude : 0.0;
    case Kind::Gaussian: {
      if (t < 0.0) return 0.0;
      const double x = (t - t0) / width;
      return amplitude * std::exp(-0.5 * x * x);
    }
  }
  return 0.0;
}

double Waveform::integral(double t) const {
  if (t <= 0.0) return 0.0;
  switch (kind) {
    case Kind::None: return 0.0;
    case Kind::Step: return amplitude * t;
    case Kind::DelayedStep: {
      const double onset = std::max(t0, 0.0);
      return t > onset ? amplitude * (t - onset) : 0.0;
    }
    case Kind::Gaussian: {
      const double c = width * std::sqrt(2.0);
      return amplitude * width * std::sqrt(std::numbers::pi / 2.0) *
             (std::erf((t - t0) / c) - std::erf(-t0 / c));
    }
  }
  return 0.0;
}

std::vector<double> Waveform::breakpoints() const {
  switch (kind) {
    case Kind::None: return {};
    case Kind::Step:
    case Kind::Gaussian: return {0.0};
    case Kind::DelayedStep: return {std::max(t0, 0.0)};
  }
  return {};
}

// --------------------------------------------------------- sample kernels

CMatrix cumulative_trapezoid(const CMatrix& f, double dt, std::size_t origin) {
  CMatrix out = CMatrix::Zero(f.rows(), f.cols());
  const auto n = static_cast<std::size_t>(f.rows());
  for (std::size_t i = origin + 1; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out.row(r) = out.row(r - 1) + 0.5 * dt * (f.row(r - 1) + f.row(r));
  }
  return out;
}

CMatrix cumulative_integral4(const CMatrix& f, double dt, std::size_t origin) {
  const auto n = static_cast<std::size_t>(f.rows());
  if (n < origin + 4) return cumulative_trapezoid(f, dt, origin);
  CMatrix out = CMatrix::Zero(f.rows(), f.cols());
  const double w = dt / 24.0;
  for (std::size_t i = origin; i + 1 < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    Eigen::RowVectorXcd piece;
    if (i == origin) {
      piece = w * (9.0 * f.row(r) + 19.0 * f.row(r + 1) - 5.0 * f.row(r + 2) + f.row(r + 3));
    } else if (i + 2 >= n) {
      piece = w * (f.row(r - 2) - 5.0 * f.row(r - 1) + 19.0 * f.row(r) + 9.0 * f.row(r + 1));
    } else {
      piece = w * (-f.row(r - 1) + 13.0 * f.row(r) + 13.0 * f.row(r + 1) - f.row(r + 2));
    }
    out.row(r + 1) = out.row(r) + piece;
  }
  return out;
}

CMatrix shift_causal(const CMatrix& f, double dt, double h, std::size_t origin) {
  require(h <= 0.0, ErrorKind::InvalidArgument, "only causal shifts (h <= 0) are supported");
  const auto n = static_cast<long long>(f.rows());
  CMatrix out = CMatrix::Zero(f.rows(), f.cols());
  const double offset = h / dt;
  const double rounded = std::round(offset);
  const bool aligned = std::abs(offset - rounded) <= kAlignTol;
  auto sample = [&](long long k) -> Eigen::RowVectorXcd {
    if (k < static_cast<long long>(origin) || k >= n) return Eigen::RowVectorXcd::Zero(f.cols());
    return f.row(static_cast<Eigen::Index>(k));
  };
  for (long long i = 0; i < n; ++i) {
    if (aligned) {
      out.row(static_cast<Eigen::Index>(i)) = sample(i + static_cast<long long>(rounded));
    } else {
      const double p = static_cast<double>(i) + offset;
      const double lo = std::floor(p);
      const double frac = p - lo;
      const auto k = static_cast<long long>(lo);
      out.row(static_cast<Eigen::Index>(i)) = (1.0 - frac) * sample(k) + frac * sample(k + 1);
    }
  }
  return out;
}

CMatrix apply_matrix_rows(const CMatrix& m, const CMatrix& f) { return f * m.transpose(); }

double weighted_l2(const CMatrix& f, const TimeGrid& grid, double nu) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const double w = std::exp(-nu * grid.time(static_cast<std::size_t>(i)));
    acc += w * w * f.row(i).squaredNorm();
  }
  return std::sqrt(grid.dt * acc);
}

CVector right_limit_at_zero(const CMatrix& samples, const TimeGrid& grid) {
  const std::size_t a = grid.first_nonnegative();
  require(a + 1 < grid.n_samples, ErrorKind::InvalidArgument,
          "grid needs two samples at t >= 0 to estimate the right limit");
  const auto ra = static_cast<Eigen::Index>(a);
  if (grid.zero_index()) return samples.row(ra).transpose();
  const double ta = grid.time(a);
  const double tb = grid.time(a + 1);
  return ((tb * samples.row(ra) - ta * samples.row(ra + 1)) / (tb - ta)).transpose();
}

// ------------------------------------------------------------- transforms

Spectrum laplace_forward(const WeightedSignal& u) {
  const auto& g = u.grid();
  CMatrix v(u.samples().rows(), u.samples().cols());
  for (std::size_t i = 0; i < g.n_samples; ++i) {
    v.row(static_cast<Eigen::Index>(i)) =
        std::exp(-u.nu() * g.time(i)) * u.samples().row(static_cast<Eigen::Index>(i));
  }
  CMatrix s = fft_columns(v);
  const auto w = g.frequencies();
  const double scale = g.dt / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t m = 0; m < g.n_samples; ++m) {
    s.row(static_cast<Eigen::Index>(m)) *= scale * std::exp(-kI * w[m] * g.t_start);
  }
  return Spectrum(g, u.nu(), std::move(s));
}

WeightedSignal laplace_inverse(const Spectrum& s) {
  const auto& g = s.grid();
  const auto w = g.frequencies();
  CMatrix x = s.samples();
  const double scale = std::sqrt(2.0 * std::numbers::pi) / g.dt;
  for (std::size_t m = 0; m < g.n_samples; ++m) {
    x.row(static_cast<Eigen::Index>(m)) *= scale * std::exp(kI * w[m] * g.t_start);
  }
  CMatrix v = ifft_columns(x);
  for (std::size_t i = 0; i < g.n_samples; ++i) {
    v.row(static_cast<Eigen::Index>(i)) *= std::exp(s.nu() * g.time(i));
  }
  return WeightedSignal(g, s.nu(), std::move(v));
}

WeightedSignal apply_inverse_derivative(const WeightedSignal& u) {
  // The sample before the window is zero, so the first interval carries dt/2 * u[0].
  CMatrix padded(u.samples().rows() + 1, u.samples().cols());
  padded.row(0).setZero();
  padded.bottomRows(u.samples().rows()) = u.samples();
  CMatrix integ = cumulative_trapezoid(padded, u.grid().dt, 0);
  return u.with_samples(integ.bottomRows(u.samples().rows()));
}

WeightedSignal apply_inverse_derivative_spectral(const WeightedSignal& u) {
  return apply_symbol(MaterialSymbol::integrator(u.channels()), u);
}

WeightedSignal apply_symbol(const MaterialSymbol& m, const WeightedSignal& u) {
  require(u.nu() > m.nu_threshold(), ErrorKind::NuTooSmall,
          "nu = " + std::to_string(u.nu()) + " must exceed 1/(2r) = " +
              std::to_string(m.nu_threshold()));
  require(u.channels() == m.dim(), ErrorKind::InvalidArgument,
          "signal channels do not match symbol dimension");
  Spectrum s = laplace_forward(u);
  CMatrix x = s.samples();
  const auto w = s.frequencies();
  for (std::size_t k = 0; k < w.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    x.row(r) = (m.at_frequency(w[k], u.nu()) * x.row(r).transpose()).transpose();
  }
  return laplace_inverse(Spectrum(s.grid(), s.nu(), std::move(x)));
}

WeightedSignal apply_symbol_causal(const MaterialSymbol& m, const WeightedSignal& u,
                                   std::size_t origin) {
  require(u.nu() > m.nu_threshold(), ErrorKind::NuTooSmall,
          "nu must exceed 1/(2r) for this symbol");
  require(u.channels() == m.dim(), ErrorKind::InvalidArgument,
          "signal channels do not match symbol dimension");
  const double dt = u.grid().dt;
  CMatrix f = u.samples();
  if (origin > 0) f.topRows(static_cast<Eigen::Index>(origin)).setZero();
  CMatrix out = CMatrix::Zero(f.rows(), f.cols());
  CMatrix power = f;
  for (std::size_t j = 0; j < m.poly().size(); ++j) {
    if (j > 0) power = cumulative_trapezoid(power, dt, origin);
    out += apply_matrix_rows(m.poly()[j], power);
  }
  for (const auto& t : m.delays()) {
    out += apply_matrix_rows(t.coeff, shift_causal(f, dt, t.h, origin));
  }
  return u.with_samples(std::move(out));
}

double weighted_norm(const WeightedSignal& u, int k) {
  require(k >= -2 && k <= 2, ErrorKind::UnsupportedOrder,
          "weighted norms are realised for k in {-2,...,2}, got " + std::to_string(k));
  if (k == 0) return weighted_l2(u.samples(), u.grid(), u.nu());
  Spectrum s = laplace_forward(u);
  const auto w = s.frequencies();
  const double dw = 2.0 * std::numbers::pi / (static_cast<double>(u.grid().n_samples) * u.grid().dt);
  double acc = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) {
    const double factor = std::pow(std::abs(cplx(u.nu(), w[m])), 2 * k);
    acc += factor * s.samples().row(static_cast<Eigen::Index>(m)).squaredNorm();
  }
  return std::sqrt(dw * acc);
}

double check_nu_independence(const MaterialSymbol& m, const WeightedSignal& u_smooth, double nu1,
                             double nu2) {
  const auto& g = u_smooth.grid();
  const auto end = static_cast<Eigen::Index>(g.unpadded_end());
  if (end < u_smooth.samples().rows()) {
    const double tail =
        u_smooth.samples().bottomRows(u_smooth.samples().rows() - end).cwiseAbs().maxCoeff();
    require(tail <= 1e-12 * std::max(1.0, u_smooth.sup_norm()), ErrorKind::InvalidArgument,
            "input must vanish on the padded tail");
  }
  const auto a = apply_symbol(m, u_smooth.with_nu(nu1));
  const auto b = apply_symbol(m, u_smooth.with_nu(nu2));
  return (a.samples().topRows(end) - b.samples().topRows(end)).cwiseAbs().maxCoeff();
}

}  // namespace dbf
