#include "dbf/evo_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include <unsupported/Eigen/MatrixFunctions>

namespace dbf {

namespace {

// 10-point Gauss-Legendre rule on [-1, 1].
constexpr std::array<double, 10> kGaussNodes = {
    -0.9739065285171717, -0.8650633666889845, -0.6794095682990244, -0.4333953941292472,
    -0.1488743389816312, 0.1488743389816312,  0.4333953941292472,  0.6794095682990244,
    0.8650633666889845,  0.9739065285171717};
constexpr std::array<double, 10> kGaussWeights = {
    0.0666713443086881, 0.1494513491505806, 0.2190863625159820, 0.2692667193099963,
    0.2955242247147529, 0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
    0.1494513491505806, 0.0666713443086881};

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool is_hermitian(const CMatrix& m, double tol) {
  return max_abs(m - m.adjoint()) <= tol * std::max(1.0, max_abs(m));
}

// Caches exp(G tau) by tau rounded to 1e-12 relative to the step scale.
class ExpCache {
 public:
  ExpCache(CMatrix g, double scale) : g_(std::move(g)), scale_(scale) {}

  const CMatrix& operator()(double tau) {
    const long long key = std::llround(tau / scale_ * 1e12);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    CMatrix e = (g_ * tau).exp();
    return cache_.emplace(key, std::move(e)).first->second;
  }

 private:
  CMatrix g_;
  double scale_;
  std::map<long long, CMatrix> cache_;
};

// int_{s0}^{s1} E(s1 - x) b wf(x) dx, split at the waveform breakpoints.
template <class Prop>
CVector forced_increment(Prop&& propagator, const CVector& b, const Waveform& wf, double s0,
                         double s1) {
  std::vector<double> pts{s0};
  for (double bp : wf.breakpoints()) {
    if (bp > s0 && bp < s1) pts.push_back(bp);
  }
  pts.push_back(s1);
  CVector acc = CVector::Zero(b.size());
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const double a = pts[s];
    const double c = pts[s + 1];
    const double half = 0.5 * (c - a);
    const double mid = 0.5 * (c + a);
    for (std::size_t q = 0; q < kGaussNodes.size(); ++q) {
      const double x = mid + half * kGaussNodes[q];
      const double f = wf.value(x);
      if (f == 0.0) continue;
      acc += (half * kGaussWeights[q] * f) * (propagator(s1 - x) * b);
    }
  }
  return acc;
}

// Trapezoidal Duhamel rule for y' + A' y = g from y(origin) = 0.
CMatrix duhamel_trapezoid(const CMatrix& expm_step, const CMatrix& g, double dt,
                          std::size_t origin) {
  CMatrix y = CMatrix::Zero(g.rows(), g.cols());
  const auto n = static_cast<std::size_t>(g.rows());
  for (std::size_t i = origin; i + 1 < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const CVector prev = y.row(r).transpose();
    const CVector gi = g.row(r).transpose();
    const CVector gn = g.row(r + 1).transpose();
    y.row(r + 1) = (expm_step * (prev + 0.5 * dt * gi) + 0.5 * dt * gn).transpose();
  }
  return y;
}

}  // namespace

// ------------------------------------------------------------ AbstractIVP

AbstractIVP::AbstractIVP(CMatrix M0_, MaterialSymbol M1_, CMatrix A_, WeightedSignal source_,
                         CVector W0_, std::optional<AnalyticForcing> forcing_)
    : M0(std::move(M0_)),
      M1(std::move(M1_)),
      A(std::move(A_)),
      source(std::move(source_)),
      W0(std::move(W0_)),
      forcing(std::move(forcing_)) {
  const auto d = M0.rows();
  require(d >= 1 && M0.cols() == d, ErrorKind::InvalidArgument, "M0 must be square");
  require(is_hermitian(M0, 1e-12), ErrorKind::InvalidArgument, "M0 must be selfadjoint");
  require(spectral_floor() > 0.0, ErrorKind::InvalidArgument,
          "M0 must be strictly positive definite");
  require(A.rows() == d && A.cols() == d, ErrorKind::InvalidArgument, "A has wrong shape");
  require(max_abs(A + A.adjoint()) <= 1e-12 * std::max(1.0, max_abs(A)),
          ErrorKind::InvalidArgument, "A must be skew-selfadjoint");
  require(M1.dim() == static_cast<std::size_t>(d), ErrorKind::InvalidArgument,
          "M1 dimension does not match M0");
  require(source.channels() == static_cast<std::size_t>(d), ErrorKind::InvalidArgument,
          "source channel count does not match M0");
  require(W0.size() == d, ErrorKind::InvalidArgument, "W0 has wrong size");
  require(source.sup_norm_before(0.0) <= 1e-14, ErrorKind::InvalidArgument,
          "source must vanish on t < 0");
  if (forcing) {
    require(forcing->amplitude.size() == d, ErrorKind::InvalidArgument,
            "forcing amplitude has wrong size");
  }
}

AbstractIVP AbstractIVP::with_forcing(CMatrix M0, MaterialSymbol M1, CMatrix A,
                                      const TimeGrid& grid, double nu, CVector W0,
                                      std::optional<AnalyticForcing> forcing) {
  const auto d = static_cast<std::size_t>(M0.rows());
  WeightedSignal src = WeightedSignal::zeros(grid, nu, d);
  if (forcing) {
    src = WeightedSignal::sampled(grid, nu, d, [&](double t) { return forcing->value(t); });
  }
  return AbstractIVP(std::move(M0), std::move(M1), std::move(A), std::move(src), std::move(W0),
                     std::move(forcing));
}

double AbstractIVP::spectral_floor() const {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (M0 + M0.adjoint()));
  return es.eigenvalues().minCoeff();
}

// ------------------------------------------------------- DescriptorSystem

DescriptorSystem DescriptorSystem::from_ivp(const AbstractIVP& p) {
  const auto d = static_cast<Eigen::Index>(p.dim());
  require(p.M1.delays().empty(), ErrorKind::UnsupportedSymbol,
          "delay terms have no finite-dimensional state realisation; use the fixed-point method");
  DescriptorSystem sys{p.M0, {}};
  sys.memory = p.M1.poly();
  if (sys.memory.empty()) sys.memory.push_back(CMatrix::Zero(d, d));
  sys.memory[0] += p.A;
  // Trailing zero coefficients only inflate the state.
  while (sys.memory.size() > 1 && max_abs(sys.memory.back()) == 0.0) sys.memory.pop_back();
  return sys;
}

std::size_t DescriptorSystem::state_dim() const {
  return dim() * std::max<std::size_t>(1, memory.size());
}

CMatrix DescriptorSystem::generator() const {
  const auto d = static_cast<Eigen::Index>(dim());
  const auto q = static_cast<Eigen::Index>(std::max<std::size_t>(1, memory.size()));
  CMatrix g = CMatrix::Zero(d * q, d * q);
  Eigen::PartialPivLU<CMatrix> lu(lead);
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(memory.size()); ++j) {
    g.block(0, j * d, d, d) = -lu.solve(memory[static_cast<std::size_t>(j)]);
  }
  for (Eigen::Index j = 1; j < q; ++j) {
    g.block(j * d, (j - 1) * d, d, d) = CMatrix::Identity(d, d);
  }
  return g;
}

CMatrix DescriptorSystem::input_map() const {
  const auto d = static_cast<Eigen::Index>(dim());
  CMatrix b = CMatrix::Zero(static_cast<Eigen::Index>(state_dim()), d);
  b.topRows(d) = lead.inverse();
  return b;
}

// -------------------------------------------------------------- helpers

CMatrix inverse_sqrt_hpd(const CMatrix& M0) {
  require(is_hermitian(M0, 1e-12), ErrorKind::InvalidArgument, "matrix must be selfadjoint");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (M0 + M0.adjoint()));
  require(es.eigenvalues().minCoeff() > 0.0, ErrorKind::InvalidArgument,
          "matrix must be positive definite");
  const Eigen::VectorXd s = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * s.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

std::size_t require_zero_index(const TimeGrid& grid) {
  auto z = grid.zero_index();
  require(z.has_value(), ErrorKind::GridMisaligned,
          "time-stepping methods need t = 0 on the grid (t_start / dt must be an integer)");
  return *z;
}

// ------------------------------------------------------------- solvers

WeightedSignal semigroup_apply(const CMatrix& M0, const CMatrix& A, const CVector& w0,
                               const TimeGrid& grid, double nu) {
  const CMatrix S = inverse_sqrt_hpd(M0);
  const CMatrix Ap = S * A * S;
  const CVector v0 = S * w0;
  CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(grid.n_samples), w0.size());
  for (std::size_t i = grid.first_nonnegative(); i < grid.n_samples; ++i) {
    const double t = std::max(0.0, grid.time(i));
    out.row(static_cast<Eigen::Index>(i)) = ((-t * Ap).exp() * v0).transpose();
  }
  return WeightedSignal(grid, nu, std::move(out));
}

SolveReport solve_fixed_point(const AbstractIVP& p, double nu, int max_iter, double tol) {
  require(nu > p.M1.nu_threshold(), ErrorKind::NuTooSmall,
          "nu must exceed 1/(2r) of the memory symbol");
  const auto& grid = p.grid();
  const std::size_t origin = require_zero_index(grid);
  const double c0 = p.spectral_floor();
  const double m1 = p.M1.is_zero() ? 0.0 : p.M1.sup_norm(nu);
  const double contraction = m1 / (nu * c0);
  require(contraction < 1.0, ErrorKind::NotContractive,
          "contraction estimate |M1|/(nu c0) = " + std::to_string(contraction) +
              " is not below 1; increase nu");

  const CMatrix S = inverse_sqrt_hpd(p.M0);
  const CMatrix E = (-grid.dt * (S * p.A * S)).exp();
  const double dt = grid.dt;

  CMatrix f = p.source.samples();
  if (origin > 0) f.topRows(static_cast<Eigen::Index>(origin)).setZero();
  const CMatrix v_base =
      semigroup_apply(p.M0, p.A, p.W0, grid, nu).samples() +
      duhamel_trapezoid(E, apply_matrix_rows(S, f), dt, origin);

  auto Q = [&](const CMatrix& v) -> CMatrix {
    if (m1 == 0.0) return CMatrix::Zero(v.rows(), v.cols());
    const WeightedSignal u(grid, nu, apply_matrix_rows(S, v));
    const CMatrix mu = apply_symbol_causal(p.M1, u, origin).samples();
    return -duhamel_trapezoid(E, apply_matrix_rows(S, mu), dt, origin);
  };

  SolveReport report{WeightedSignal(grid, nu, v_base), 0, 0.0, contraction, nu, 0.0,
                     "fixed_point", {}, 0.0};
  CMatrix v = v_base;
  bool converged = false;
  for (int it = 1; it <= max_iter; ++it) {
    CMatrix next = v_base + Q(v);
    const double inc = weighted_l2(next - v, grid, nu);
    v = std::move(next);
    report.increments.push_back(inc);
    report.iterations = it;
    if (inc <= tol * std::max(1.0, weighted_l2(v, grid, nu))) {
      converged = true;
      break;
    }
  }
  require(converged, ErrorKind::NoConvergence,
          "Picard iteration did not reach tol within " + std::to_string(max_iter) + " sweeps");

  const double scale = weighted_l2(v, grid, nu);
  for (std::size_t i = 1; i < report.increments.size(); ++i) {
    if (report.increments[i - 1] > 1e-12 * std::max(1.0, scale)) {
      report.max_observed_ratio =
          std::max(report.max_observed_ratio, report.increments[i] / report.increments[i - 1]);
    }
  }
  report.final_residual = weighted_l2(v - v_base - Q(v), grid, nu);
  report.solution = WeightedSignal(grid, nu, apply_matrix_rows(S, v));
  report.initial_value_error = verify_initial_value(report, p.M0, p.W0);
  return report;
}

WeightedSignal solve_modal_exact(const AbstractIVP& p) {
  require(p.dim() == 2, ErrorKind::WrongCase, "modal solver needs a 2x2 block");
  require(max_abs(p.A) == 0.0, ErrorKind::WrongCase, "modal solver needs A = 0");
  require(p.M1.delays().empty() && p.M1.is_constant(), ErrorKind::WrongCase,
          "modal solver needs a constant coupling M1 = c J");
  const CMatrix m = p.M1.at_origin();
  const cplx c = m(1, 0);
  require(std::abs(m(0, 0)) + std::abs(m(1, 1)) + std::abs(m(0, 1) + c) <=
                  1e-14 * std::max(1.0, std::abs(c)) &&
              std::abs(c.imag()) <= 1e-14 * std::max(1.0, std::abs(c)),
          ErrorKind::WrongCase, "M1 must have the form c [[0,-1],[1,0]] with real c");
  require(std::abs(p.M0(0, 1)) + std::abs(p.M0(1, 0)) == 0.0, ErrorKind::WrongCase,
          "modal solver needs diagonal M0");
  const bool has_forcing = p.forcing && !p.forcing->wf.is_zero();
  require(has_forcing || p.source.sup_norm() == 0.0, ErrorKind::InvalidArgument,
          "exact methods need the source in closed form");

  const double eps = p.M0(0, 0).real();
  const double mu = p.M0(1, 1).real();
  const double se = std::sqrt(eps);
  const double sm = std::sqrt(mu);
  const double omega = c.real() / (se * sm);
  // (a, b) = (sqrt(eps) e, sqrt(mu) h) obeys a' = omega b, b' = -omega a.
  auto rot = [omega](double tau) {
    CMatrix r(2, 2);
    const double cs = std::cos(omega * tau);
    const double sn = std::sin(omega * tau);
    r << cs, sn, -sn, cs;
    return r;
  };
  CVector y0(2);
  y0 << p.W0(0) / se, p.W0(1) / sm;
  CVector b = CVector::Zero(2);
  if (has_forcing) b << p.forcing->amplitude(0) / se, p.forcing->amplitude(1) / sm;

  const auto& grid = p.grid();
  CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(grid.n_samples), 2);
  CVector forced = CVector::Zero(2);
  double t_prev = 0.0;
  for (std::size_t i = grid.first_nonnegative(); i < grid.n_samples; ++i) {
    const double t = std::max(0.0, grid.time(i));
    if (has_forcing && t > t_prev) {
      forced = rot(t - t_prev) * forced + forced_increment(rot, b, p.forcing->wf, t_prev, t);
    }
    t_prev = t;
    const CVector y = rot(t) * y0 + forced;
    out(static_cast<Eigen::Index>(i), 0) = y(0) / se;
    out(static_cast<Eigen::Index>(i), 1) = y(1) / sm;
  }
  return WeightedSignal(grid, p.source.nu(), std::move(out));
}

CMatrix descriptor_trajectory(const DescriptorSystem& sys, const TimeGrid& grid,
                              const CVector& W0, const std::optional<AnalyticForcing>& forcing,
                              const CMatrix* sampled_source, bool exact) {
  const auto d = static_cast<Eigen::Index>(sys.dim());
  const auto sd = static_cast<Eigen::Index>(sys.state_dim());
  const CMatrix G = sys.generator();
  const CMatrix B = sys.input_map();
  CVector y0 = CVector::Zero(sd);
  y0.head(d) = sys.lead.partialPivLu().solve(W0);
  CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(grid.n_samples), sd);
  ExpCache expm(G, grid.dt);

  if (exact) {
    const bool has_forcing = forcing && !forcing->wf.is_zero();
    require(has_forcing || sampled_source == nullptr || max_abs(*sampled_source) == 0.0,
            ErrorKind::InvalidArgument, "exact methods need the source in closed form");
    const CVector b = has_forcing ? CVector(B * forcing->amplitude) : CVector::Zero(sd);
    CVector hom = y0;
    CVector forced = CVector::Zero(sd);
    double t_prev = 0.0;
    for (std::size_t i = grid.first_nonnegative(); i < grid.n_samples; ++i) {
      const double t = std::max(0.0, grid.time(i));
      if (t > t_prev) {
        const CMatrix& step = expm(t - t_prev);
        hom = step * hom;
        if (has_forcing) {
          forced = step * forced + forced_increment(expm, b, forcing->wf, t_prev, t);
        }
      }
      t_prev = t;
      out.row(static_cast<Eigen::Index>(i)) = (hom + forced).transpose();
    }
    return out;
  }

  const std::size_t origin = require_zero_index(grid);
  const CMatrix& step = expm(grid.dt);
  CVector y = y0;
  out.row(static_cast<Eigen::Index>(origin)) = y.transpose();
  for (std::size_t i = origin; i + 1 < grid.n_samples; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (sampled_source != nullptr) {
      const CVector fi = B * sampled_source->row(r).transpose();
      const CVector fn = B * sampled_source->row(r + 1).transpose();
      y = step * (y + 0.5 * grid.dt * fi) + 0.5 * grid.dt * fn;
    } else {
      y = step * y;
    }
    out.row(r + 1) = y.transpose();
  }
  return out;
}

namespace {

SolveReport direct_report(const AbstractIVP& p, CMatrix states, const char* method) {
  const auto d = static_cast<Eigen::Index>(p.dim());
  WeightedSignal u(p.grid(), p.source.nu(), states.leftCols(d));
  SolveReport report{u, 0, 0.0, 0.0, p.source.nu(), 0.0, method, {}, 0.0};
  report.final_residual = evolution_residual(p, u);
  report.initial_value_error = verify_initial_value(report, p.M0, p.W0);
  return report;
}

}  // namespace

SolveReport solve_exact(const AbstractIVP& p) {
  const auto sys = DescriptorSystem::from_ivp(p);
  return direct_report(
      p, descriptor_trajectory(sys, p.grid(), p.W0, p.forcing, &p.source.samples(), true),
      "exact");
}

SolveReport solve_integrator(const AbstractIVP& p) {
  const auto sys = DescriptorSystem::from_ivp(p);
  return direct_report(
      p, descriptor_trajectory(sys, p.grid(), p.W0, p.forcing, &p.source.samples(), false),
      "integrator");
}

// ---------------------------------------------------------- diagnostics

double evolution_residual(const AbstractIVP& p, const WeightedSignal& U) {
  const auto& grid = U.grid();
  const std::size_t a = grid.first_nonnegative();
  if (a >= grid.n_samples) return 0.0;
  const auto ra = static_cast<Eigen::Index>(a);
  const auto len = static_cast<Eigen::Index>(grid.n_samples - a);
  const double dt = grid.dt;
  const double ta = std::max(0.0, grid.time(a));

  CMatrix integrand = apply_matrix_rows(p.A, U.samples());
  if (!p.M1.is_zero()) integrand += apply_symbol_causal(p.M1, U, a).samples();
  CMatrix acc = cumulative_integral4(integrand.bottomRows(len), dt, 0);
  // int_0^{t_a} of the solution terms (first order; zero on aligned grids).
  acc.rowwise() += ta * integrand.row(ra);

  if (p.forcing) {
    for (Eigen::Index i = 0; i < len; ++i) {
      acc.row(i) -= p.forcing->integral(grid.time(a + static_cast<std::size_t>(i))).transpose();
    }
  } else {
    const CMatrix f = p.source.samples().bottomRows(len);
    acc -= cumulative_integral4(f, dt, 0);
    acc.rowwise() -= ta * f.row(0);
  }
  CMatrix r = apply_matrix_rows(p.M0, U.samples().bottomRows(len)) + acc;
  r.rowwise() -= p.W0.transpose();
  CMatrix full = CMatrix::Zero(U.samples().rows(), U.samples().cols());
  full.bottomRows(len) = r;
  return weighted_l2(full, grid, U.nu());
}

double verify_initial_value(const SolveReport& report, const CMatrix& M0, const CVector& W0) {
  const CVector u0 = right_limit_at_zero(report.solution.samples(), report.solution.grid());
  return (u0 - M0.partialPivLu().solve(W0)).norm();
}

double verify_regularity_ode(const SolveReport& report, const AbstractIVP& p) {
  require(max_abs(p.A) == 0.0, ErrorKind::WrongCase,
          "the split regularity statement is for A = 0");
  const auto& u = report.solution;
  const CVector step = p.M0.partialPivLu().solve(p.W0);
  CMatrix diff = u.samples();
  for (std::size_t i = u.grid().first_nonnegative(); i < u.grid().n_samples; ++i) {
    diff.row(static_cast<Eigen::Index>(i)) -= step.transpose();
  }
  return weighted_norm(u.with_samples(std::move(diff)), 1);
}

double verify_causality(const SolveReport& report, double t_limit) {
  return report.solution.sup_norm_before(t_limit);
}

}  // namespace dbf
