#include "dbf/dbf_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dbf/parallel.hpp"

namespace dbf {

namespace {

CMatrix rotation2() {
  CMatrix j(2, 2);
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

std::string describe_mode(const ModeTable& t, std::size_t i) {
  const auto& m = t[i];
  std::ostringstream os;
  os << "mode " << i << " k=(" << m.k[0] << "," << m.k[1] << "," << m.k[2] << ") "
     << to_string(m.helicity) << " lambda=" << m.eigenvalue;
  return os.str();
}

double waveform_sup(const Waveform& wf) {
  if (wf.is_zero()) return 0.0;
  if (wf.kind == Waveform::Kind::Gaussian) return std::abs(wf.value(std::max(wf.t0, 0.0)));
  return std::abs(wf.amplitude);
}

void validate(const DBFScenario& s) {
  require(s.table != nullptr, ErrorKind::InvalidArgument, "scenario has no mode table");
  require(s.epsilon > 0.0 && s.mu > 0.0, ErrorKind::InvalidArgument,
          "epsilon and mu must be positive");
  require(s.eta != 0.0 && std::isfinite(s.eta), ErrorKind::InvalidArgument,
          "eta must be a nonzero real number");
  require(s.nu > 0.0, ErrorKind::InvalidArgument, "nu must be positive");
  s.grid.validate();
  const auto n = static_cast<Eigen::Index>(s.table->size());
  require(s.W0.e_part.coeffs.size() == n && s.W0.h_part.coeffs.size() == n,
          ErrorKind::InvalidArgument, "W0 does not match the mode table");
  require(s.source.amplitude.e_part.coeffs.size() == n &&
              s.source.amplitude.h_part.coeffs.size() == n,
          ErrorKind::InvalidArgument, "source amplitude does not match the mode table");
}

// Rows of `m` with t < 0.
double sup_before_zero(const CMatrix& m, const TimeGrid& grid) {
  const auto a = static_cast<Eigen::Index>(grid.first_nonnegative());
  if (a == 0 || m.size() == 0) return 0.0;
  return m.topRows(a).cwiseAbs().maxCoeff();
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::Exact: return "exact";
    case Method::FixedPoint: return "fixed_point";
    case Method::Integrator: return "integrator";
  }
  return "exact";
}

Method method_from_string(const std::string& s) {
  if (s == "exact") return Method::Exact;
  if (s == "fixed_point") return Method::FixedPoint;
  if (s == "integrator") return Method::Integrator;
  throw Error(ErrorKind::Schema, "unknown method '" + s + "'");
}

double Tolerances::initial_value_tol(Method m, double dt) const {
  if (iv_tol >= 0.0) return iv_tol;
  return m == Method::Exact ? 1e-8 : 10.0 * dt;
}

ModalSource ModalSource::none(const ModeTablePtr& table) {
  return ModalSource{Waveform{}, FieldPair::zeros(table)};
}

bool ModalSource::is_zero() const {
  return wf.is_zero() ||
         (amplitude.e_part.coeffs.isZero(0.0) && amplitude.h_part.coeffs.isZero(0.0));
}

FieldHistory FieldHistory::zeros(const TimeGrid& grid, double nu, ModeTablePtr table) {
  const auto n = static_cast<Eigen::Index>(grid.n_samples);
  const auto m = static_cast<Eigen::Index>(table->size());
  FieldHistory h;
  h.grid = grid;
  h.nu = nu;
  h.table = std::move(table);
  h.E = h.H = h.D = h.B = CMatrix::Zero(n, m);
  return h;
}

FieldPair FieldHistory::eh_at(std::size_t i) const {
  const auto r = static_cast<Eigen::Index>(i);
  return FieldPair(SpectralField{table, E.row(r).transpose(), "V/m"},
                   SpectralField{table, H.row(r).transpose(), "A/m"});
}

FieldPair FieldHistory::db_at(std::size_t i) const {
  const auto r = static_cast<Eigen::Index>(i);
  return FieldPair(SpectralField{table, D.row(r).transpose(), "C/m^2"},
                   SpectralField{table, B.row(r).transpose(), "T"});
}

// ------------------------------------------------------- naive symbol

CMatrix naive_symbol(double epsilon, double mu, double eta, cplx z) {
  const cplx w = z / (eta * std::sqrt(epsilon * mu));
  CMatrix m(2, 2);
  m << w * w, -w, w, w * w;
  return m / (1.0 + w * w);
}

NaiveDiagnosis diagnose_naive_formulation(double epsilon, double mu, double eta) {
  require(epsilon > 0.0 && mu > 0.0 && eta != 0.0, ErrorKind::InvalidArgument,
          "need epsilon, mu > 0 and eta != 0");
  // Poles sit at |z| = |eta| sqrt(eps mu); sample well inside.
  const double rho = 0.5 * std::abs(eta) * std::sqrt(epsilon * mu);
  const int n = 64;
  NaiveDiagnosis out;
  out.coefficients.assign(3, CMatrix::Zero(2, 2));
  for (int k = 0; k < n; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / n;
    const cplx z = std::polar(rho, theta);
    const CMatrix m = naive_symbol(epsilon, mu, eta, z);
    for (int j = 0; j < 3; ++j) out.coefficients[j] += m * std::pow(z, -j) / static_cast<double>(n);
  }
  const double scale = std::max(1.0, out.coefficients[1].norm());
  for (auto& c : out.coefficients) {
    c = c.unaryExpr([scale](cplx v) { return std::abs(v) <= 1e-13 * scale ? cplx(0.0) : v; });
  }
  out.z1_real_part = 0.5 * (out.coefficients[1] + out.coefficients[1].adjoint());
  auto min_real_eig = [](const CMatrix& c) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (c + c.adjoint()));
    return es.eigenvalues().minCoeff();
  };
  const double floor0 = min_real_eig(out.coefficients[0]);
  const double floor1 = min_real_eig(out.coefficients[1]);
  out.degenerate = floor0 <= 1e-12 * scale && floor1 <= 1e-12 * scale;
  out.verdict = out.degenerate ? "degenerate: fails strict positivity"
                               : "regular: strictly positive leading term";
  return out;
}

// ------------------------------------------------------ range, reduction

RangeVerdict check_data_range(double eta, const ModalSource& source, const FieldPair& W0,
                              const Tolerances& tol) {
  RangeVerdict v;
  const auto& t = *W0.table();
  const double wsup = waveform_sup(source.wf);
  std::ostringstream os;
  for (auto i : t.kernel_modes(eta, tol.kernel_tol)) {
    const auto r = static_cast<Eigen::Index>(i);
    const double w = std::max(std::abs(W0.e_part.coeffs(r)), std::abs(W0.h_part.coeffs(r)));
    const double j = wsup * std::max(std::abs(source.amplitude.e_part.coeffs(r)),
                                     std::abs(source.amplitude.h_part.coeffs(r)));
    const double worst = std::max(w, j);
    v.worst = std::max(v.worst, worst);
    if (worst > tol.range_tol) {
      v.ok = false;
      v.offending.push_back(i);
      os << "  " << describe_mode(t, i) << ": |W0| = " << w << ", sup|J| = " << j << "\n";
    }
  }
  if (v.ok) {
    v.message = "data lie in the range of 1 + eta curl";
  } else {
    v.message = std::to_string(v.offending.size()) +
                " kernel mode(s) of 1 + eta curl carry data:\n" + os.str();
  }
  return v;
}

std::vector<ReducedBlock> assemble_reduced_ivp(const DBFScenario& s) {
  validate(s);
  const auto verdict = check_data_range(s.eta, s.source, s.W0, s.tol);
  require(verdict.ok, ErrorKind::RangeViolation, verdict.message);
  const auto& t = *s.table;
  CMatrix m0 = CMatrix::Zero(2, 2);
  m0(0, 0) = s.epsilon;
  m0(1, 1) = s.mu;
  const bool forced = !s.source.is_zero();
  std::vector<ReducedBlock> blocks;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double lambda = t[i].eigenvalue;
    const double sigma = 1.0 + s.eta * lambda;
    if (std::abs(sigma) <= s.tol.kernel_tol) continue;
    const auto r = static_cast<Eigen::Index>(i);
    const double c = lambda / sigma;
    CVector w0(2);
    w0 << s.W0.e_part.coeffs(r) / sigma, s.W0.h_part.coeffs(r) / sigma;
    std::optional<AnalyticForcing> forcing;
    if (forced) {
      CVector amp(2);
      amp << s.source.amplitude.e_part.coeffs(r) / sigma,
          s.source.amplitude.h_part.coeffs(r) / sigma;
      forcing = AnalyticForcing{s.source.wf, amp};
    }
    blocks.push_back(ReducedBlock{
        i, lambda, c,
        AbstractIVP::with_forcing(m0, MaterialSymbol::constant(c * rotation2()),
                                  CMatrix::Zero(2, 2), s.grid, s.nu, w0, forcing)});
  }
  return blocks;
}

// ---------------------------------------------------------------- solve

FieldPair recover_DB(const FieldPair& eh, const DBFScenario& s) {
  const Eigen::VectorXd lam = eh.table()->eigenvalues();
  const CVector factor = (1.0 + s.eta * lam.array()).matrix().cast<cplx>();
  return FieldPair(SpectralField{eh.table(), s.epsilon * factor.cwiseProduct(eh.e_part.coeffs), "C/m^2"},
                   SpectralField{eh.table(), s.mu * factor.cwiseProduct(eh.h_part.coeffs), "T"});
}

void recover_DB(FieldHistory& h, const DBFScenario& s) {
  const Eigen::VectorXd lam = h.table->eigenvalues();
  const Eigen::RowVectorXcd factor = (1.0 + s.eta * lam.array()).matrix().cast<cplx>().transpose();
  h.D = (s.epsilon * h.E).array().rowwise() * factor.array();
  h.B = (s.mu * h.H).array().rowwise() * factor.array();
}

FieldHistory solve_dbf(const DBFScenario& s, Method method) {
  auto blocks = assemble_reduced_ivp(s);
  FieldHistory h = FieldHistory::zeros(s.grid, s.nu, s.table);
  h.kernel_modes = s.table->kernel_modes(s.eta, s.tol.kernel_tol);
  h.diag.method = to_string(method);

  std::vector<Method> per_block(blocks.size(), method);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const double sigma = 1.0 + s.eta * blocks[b].lambda;
    if (std::abs(sigma) <= s.tol.near_kernel && method != Method::Exact) {
      per_block[b] = Method::Exact;
      h.diag.warnings.push_back("near-kernel " + describe_mode(*s.table, blocks[b].mode) +
                                " (|1 + eta lambda| = " + std::to_string(std::abs(sigma)) +
                                "); solved with the exact method");
    }
  }

  struct BlockStats {
    int iterations = 0;
    double contraction = 0.0;
    double ratio = 0.0;
  };
  std::vector<BlockStats> stats(blocks.size());
  parallel_for(blocks.size(), [&](std::size_t b) {
    const auto& blk = blocks[b];
    WeightedSignal u = WeightedSignal::zeros(s.grid, s.nu, 2);
    switch (per_block[b]) {
      case Method::Exact: u = solve_modal_exact(blk.ivp); break;
      case Method::Integrator: u = solve_integrator(blk.ivp).solution; break;
      case Method::FixedPoint: {
        auto rep = solve_fixed_point(blk.ivp, s.nu, s.tol.max_iter, s.tol.fp_tol);
        stats[b] = {rep.iterations, rep.contraction_estimate, rep.max_observed_ratio};
        u = rep.solution;
        break;
      }
    }
    const auto col = static_cast<Eigen::Index>(blk.mode);
    h.E.col(col) = u.samples().col(0);
    h.H.col(col) = u.samples().col(1);
  });
  for (const auto& st : stats) {
    h.diag.iterations = std::max(h.diag.iterations, st.iterations);
    h.diag.contraction_estimate = std::max(h.diag.contraction_estimate, st.contraction);
    h.diag.max_observed_ratio = std::max(h.diag.max_observed_ratio, st.ratio);
  }
  recover_DB(h, s);
  h.diag.residual = maxwell_residual(h, s.source, s.W0);
  h.diag.initial_value_error = initial_value_proxy(h, s.W0);
  h.diag.causality_sup = causality_sup(h);
  return h;
}

// ---------------------------------------------------------- diagnostics

double maxwell_residual(const FieldHistory& h, const ModalSource& source, const FieldPair& W0) {
  const auto& grid = h.grid;
  const std::size_t a = grid.first_nonnegative();
  if (a >= grid.n_samples) return 0.0;
  const auto len = static_cast<Eigen::Index>(grid.n_samples - a);
  const double ta = std::max(0.0, grid.time(a));
  const Eigen::RowVectorXcd lam = h.table->eigenvalues().cast<cplx>().transpose();
  const Eigen::RowVectorXd weight =
      (1.0 + h.table->eigenvalues().array().square()).rsqrt().matrix().transpose();

  // Integrands of the d and b rows: -lambda H and +lambda E.
  const CMatrix gd = -(h.H.bottomRows(len).array().rowwise() * lam.array()).matrix();
  const CMatrix gb = (h.E.bottomRows(len).array().rowwise() * lam.array()).matrix();
  CMatrix rd = h.D.bottomRows(len) + cumulative_integral4(gd, grid.dt, 0);
  CMatrix rb = h.B.bottomRows(len) + cumulative_integral4(gb, grid.dt, 0);
  // int_0^{t_a}, first order; vanishes on aligned grids.
  rd.rowwise() += ta * gd.row(0);
  rb.rowwise() += ta * gb.row(0);
  const Eigen::RowVectorXcd je = source.amplitude.e_part.coeffs.transpose();
  const Eigen::RowVectorXcd jh = source.amplitude.h_part.coeffs.transpose();
  for (Eigen::Index i = 0; i < len; ++i) {
    const double integ = source.wf.integral(grid.time(a + static_cast<std::size_t>(i)));
    rd.row(i) -= integ * je + W0.e_part.coeffs.transpose();
    rb.row(i) -= integ * jh + W0.h_part.coeffs.transpose();
  }
  rd = (rd.array().rowwise() * weight.cast<cplx>().array()).matrix();
  rb = (rb.array().rowwise() * weight.cast<cplx>().array()).matrix();
  CMatrix full = CMatrix::Zero(static_cast<Eigen::Index>(grid.n_samples), 2 * lam.size());
  full.bottomRows(len) << rd, rb;
  return weighted_l2(full, grid, h.nu);
}

double initial_value_proxy(const FieldHistory& h, const FieldPair& W0) {
  const Eigen::VectorXd weight = (1.0 + h.table->eigenvalues().array().square()).rsqrt();
  const CVector d0 = right_limit_at_zero(h.D, h.grid) - W0.e_part.coeffs;
  const CVector b0 = right_limit_at_zero(h.B, h.grid) - W0.h_part.coeffs;
  const double a = d0.cwiseProduct(weight.cast<cplx>()).squaredNorm();
  const double b = b0.cwiseProduct(weight.cast<cplx>()).squaredNorm();
  return std::sqrt(a + b);
}

double causality_sup(const FieldHistory& h) {
  return std::max({sup_before_zero(h.E, h.grid), sup_before_zero(h.H, h.grid),
                   sup_before_zero(h.D, h.grid), sup_before_zero(h.B, h.grid)});
}

double verify_dbf_equation(const FieldHistory& h, const DBFScenario& s) {
  return maxwell_residual(h, s.source, s.W0);
}

double uniqueness_energy_probe(const FieldHistory& h, const DBFScenario& s) {
  const auto kernel = s.table->kernel_modes(s.eta, s.tol.kernel_tol);
  std::vector<bool> in_kernel(s.table->size(), false);
  for (auto i : kernel) in_kernel[i] = true;
  double energy = 0.0;
  double kernel_sup = 0.0;
  for (std::size_t m = 0; m < s.table->size(); ++m) {
    const auto c = static_cast<Eigen::Index>(m);
    if (in_kernel[m]) {
      kernel_sup = std::max({kernel_sup, h.E.col(c).cwiseAbs().maxCoeff(),
                             h.H.col(c).cwiseAbs().maxCoeff()});
      continue;
    }
    const double e = weighted_l2(h.E.col(c), h.grid, h.nu);
    const double hh = weighted_l2(h.H.col(c), h.grid, h.nu);
    energy += s.epsilon * e * e + s.mu * hh * hh;
  }
  return s.nu * energy + kernel_sup;
}

double projector_identity_defect(double eta, const SpectralField& f, double kernel_tol) {
  const SpectralField pf = projector_P(eta, f, kernel_tol);
  const SpectralField cf = curl_apply(f);
  const SpectralField pcf = projector_P(eta, cf, kernel_tol);
  const CVector lhs = cf.coeffs - pcf.coeffs;
  const CVector rhs = -(f.coeffs - pf.coeffs) / eta;
  const double d1 = (lhs - rhs).cwiseAbs().maxCoeff();
  const double d2 = (pcf.coeffs - curl_apply(pf).coeffs).cwiseAbs().maxCoeff();
  return std::max(d1, d2);
}

}  // namespace dbf
