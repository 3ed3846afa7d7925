// Generalized material law (D, B) = (kappa(z) + curl) Mstar(z) (E, H), z = d0^{-1}.
//
// Per block the symbol P(z) = (kappa(z) + lambda) Mstar(z) = sum_j P_j z^j turns
// the Maxwell system into the descriptor form
//
//   d0 P_0 X + (P_1 + lambda J) X + sum_{j>=2} P_j (d0^{-1})^{j-1} X = J + delta (x) W0,
//
// so (kappa0 + lambda) Mstar0 X(0+) = W0 holds by construction.

#include <algorithm>
#include <map>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "dbf/dbf_model.hpp"
#include "dbf/parallel.hpp"

namespace dbf {

namespace {

bool is_hpd(const CMatrix& m) {
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
  return es.eigenvalues().minCoeff() > 0.0;
}

double sigma_min(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues().minCoeff();
}

CMatrix rotation2() {
  CMatrix j(2, 2);
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

void validate(const GeneralizedScenario& g) {
  require(g.table != nullptr, ErrorKind::InvalidArgument, "scenario has no mode table");
  require(g.nu > 0.0, ErrorKind::InvalidArgument, "nu must be positive");
  g.grid.validate();
  require(g.kappa0.rows() == 2 && g.kappa0.cols() == 2 && g.mstar0.rows() == 2 &&
              g.mstar0.cols() == 2,
          ErrorKind::InvalidArgument, "kappa0 and Mstar0 must be 2x2 blocks on (E, H)");
  require(is_hpd(g.kappa0), ErrorKind::HypothesisViolated,
          "kappa0 must be selfadjoint and strictly positive definite");
  require(is_hpd(g.mstar0), ErrorKind::HypothesisViolated,
          "Mstar0 must be selfadjoint and strictly positive definite");
  require(g.kappa1.dim() == 2 && g.mstar1.dim() == 2, ErrorKind::InvalidArgument,
          "kappa1 and Mstar1 must act on the (E, H) pair");
  require(g.kappa1.delays().empty() && g.mstar1.delays().empty(), ErrorKind::UnsupportedSymbol,
          "the generalized model supports polynomial kappa1 and Mstar1 only");
  require(g.nu > std::max(g.kappa1.nu_threshold(), g.mstar1.nu_threshold()),
          ErrorKind::NuTooSmall, "nu must exceed 1/(2r) for kappa1 and Mstar1");
  const auto n = static_cast<Eigen::Index>(g.table->size());
  require(g.W0.e_part.coeffs.size() == n && g.W0.h_part.coeffs.size() == n,
          ErrorKind::InvalidArgument, "W0 does not match the mode table");
  require(g.source.amplitude.e_part.coeffs.size() == n &&
              g.source.amplitude.h_part.coeffs.size() == n,
          ErrorKind::InvalidArgument, "source amplitude does not match the mode table");
}

// Groups of modes coupled by a matrix (connected components of its sparsity graph).
std::vector<std::vector<std::size_t>> coupled_groups(const CMatrix& m, std::size_t n) {
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  if (m.size() > 0) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (std::abs(m(i, j)) > 1e-12 * scale) {
          parent[find(static_cast<std::size_t>(i))] = find(static_cast<std::size_t>(j));
        }
      }
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  std::sort(out.begin(), out.end());
  return out;
}

struct BlockSystem {
  std::vector<std::size_t> modes;
  std::vector<CMatrix> P;  // symbol coefficients P_j
  DescriptorSystem sys;
  CVector W0;
  std::optional<AnalyticForcing> forcing;
};

BlockSystem build_block(const GeneralizedScenario& g, const std::vector<std::size_t>& modes,
                        const CMatrix* cross) {
  const auto nb = static_cast<Eigen::Index>(modes.size());
  const CMatrix I = CMatrix::Identity(nb, nb);
  CMatrix lam = CMatrix::Zero(nb, nb);
  for (Eigen::Index i = 0; i < nb; ++i) lam(i, i) = (*g.table)[modes[i]].eigenvalue;

  // kappa(z) + lambda and Mstar(z) as polynomials in z over the block.
  std::vector<CMatrix> kap{kron(I, g.kappa0) + kron(lam, CMatrix::Identity(2, 2))};
  for (const auto& c : g.kappa1.poly()) kap.push_back(kron(I, c));
  std::vector<CMatrix> mst{kron(I, g.mstar0)};
  for (const auto& c : g.mstar1.poly()) mst.push_back(kron(I, c));
  if (cross != nullptr) {
    CMatrix sub(nb, nb);
    for (Eigen::Index i = 0; i < nb; ++i) {
      for (Eigen::Index j = 0; j < nb; ++j) {
        sub(i, j) = (*cross)(static_cast<Eigen::Index>(modes[i]), static_cast<Eigen::Index>(modes[j]));
      }
    }
    if (mst.size() < 2) mst.push_back(CMatrix::Zero(2 * nb, 2 * nb));
    mst[1] += g.cross_scale * kron(sub, CMatrix::Identity(2, 2));
  }
  BlockSystem b;
  b.modes = modes;
  b.P.assign(kap.size() + mst.size() - 1, CMatrix::Zero(2 * nb, 2 * nb));
  for (std::size_t a = 0; a < kap.size(); ++a) {
    for (std::size_t c = 0; c < mst.size(); ++c) b.P[a + c] += kap[a] * mst[c];
  }
  while (b.P.size() > 1 && b.P.back().cwiseAbs().maxCoeff() == 0.0) b.P.pop_back();

  b.sys.lead = b.P[0];
  b.sys.memory.push_back(kron(lam, rotation2()));
  if (b.P.size() > 1) b.sys.memory[0] += b.P[1];
  for (std::size_t j = 2; j < b.P.size(); ++j) b.sys.memory.push_back(b.P[j]);
  // One extra integrator slot so that the highest power of d0^{-1} X needed
  // for (D, B) is part of the state.
  if (b.P.size() > 1) b.sys.memory.push_back(CMatrix::Zero(2 * nb, 2 * nb));

  b.W0.resize(2 * nb);
  CVector amp(2 * nb);
  for (Eigen::Index i = 0; i < nb; ++i) {
    const auto m = static_cast<Eigen::Index>(modes[i]);
    b.W0(2 * i) = g.W0.e_part.coeffs(m);
    b.W0(2 * i + 1) = g.W0.h_part.coeffs(m);
    amp(2 * i) = g.source.amplitude.e_part.coeffs(m);
    amp(2 * i + 1) = g.source.amplitude.h_part.coeffs(m);
  }
  if (!g.source.is_zero()) b.forcing = AnalyticForcing{g.source.wf, amp};
  return b;
}

struct NeumannProbe {
  double norm = 0.0;
  int terms = 0;
  bool diverged = false;
  double deviation = 0.0;
};

// Neumann series for (1 - Q0)^{-1} at the worst frequency of the worst mode,
// compared with the direct inverse of kappa(z) + lambda.
NeumannProbe probe_neumann(const GeneralizedScenario& g) {
  NeumannProbe out;
  if (g.kappa1.is_zero()) return out;
  std::vector<double> lambdas;
  for (const auto& m : g.table->modes()) lambdas.push_back(m.eigenvalue);
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-14; }),
                lambdas.end());
  const int n_theta = 2048;
  double worst_lambda = lambdas.front();
  cplx worst_z = 1.0 / g.nu;
  for (double lambda : lambdas) {
    const CMatrix base_inv = (g.kappa0 + lambda * CMatrix::Identity(2, 2)).inverse();
    for (int k = 0; k <= n_theta; ++k) {
      const double theta =
          k == n_theta ? 0.0
                       : -std::numbers::pi + (k + 0.5) * 2.0 * std::numbers::pi / n_theta;
      const cplx z = 1.0 / cplx(g.nu, g.nu * std::tan(0.5 * theta));
      const CMatrix q = -base_inv * z * g.kappa1.evaluate(z);
      Eigen::JacobiSVD<CMatrix> svd(q);
      const double nq = svd.singularValues()(0);
      if (nq > out.norm) {
        out.norm = nq;
        worst_lambda = lambda;
        worst_z = z;
      }
    }
  }
  const CMatrix id = CMatrix::Identity(2, 2);
  const CMatrix base_inv = (g.kappa0 + worst_lambda * id).inverse();
  const CMatrix q = -base_inv * worst_z * g.kappa1.evaluate(worst_z);
  CMatrix term = id;
  CMatrix sum = id;
  double prev = 1.0;
  int growth = 0;
  for (out.terms = 1; out.terms < g.tol.neumann_max_terms; ++out.terms) {
    term = q * term;
    const double tn = term.norm();
    sum += term;
    if (tn < g.tol.neumann_tol) break;
    growth = tn > prev ? growth + 1 : 0;
    prev = tn;
    if (growth >= 5) {
      out.diverged = true;
      break;
    }
  }
  const CMatrix kz = g.kappa0 + worst_z * g.kappa1.evaluate(worst_z) + worst_lambda * id;
  const CMatrix c_direct = kz.inverse() * worst_lambda;
  const CMatrix c_series = sum * base_inv * worst_lambda;
  out.deviation = (c_direct - c_series).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace

double neumann_norm(const GeneralizedScenario& g) { return probe_neumann(g).norm; }

GeneralizedScenario as_generalized(const DBFScenario& s) {
  GeneralizedScenario g{s.table,
                        s.grid,
                        s.nu,
                        CMatrix::Identity(2, 2) / s.eta,
                        MaterialSymbol::zero(2),
                        CMatrix::Zero(2, 2),
                        MaterialSymbol::zero(2),
                        std::nullopt,
                        1.0,
                        s.source,
                        s.W0,
                        s.tol};
  g.mstar0(0, 0) = s.eta * s.epsilon;
  g.mstar0(1, 1) = s.eta * s.mu;
  return g;
}

FieldHistory solve_generalized(const GeneralizedScenario& g, Method method) {
  validate(g);
  const auto& table = *g.table;

  std::ostringstream bad;
  int n_bad = 0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double s = sigma_min(g.kappa0 + table[i].eigenvalue * CMatrix::Identity(2, 2));
    if (s <= g.tol.kernel_tol) {
      ++n_bad;
      bad << "  mode " << i << " lambda=" << table[i].eigenvalue << ": sigma_min = " << s << "\n";
    }
  }
  require(n_bad == 0, ErrorKind::HypothesisViolated,
          std::to_string(n_bad) + " mode(s) put -1 in the spectrum of kappa0^{-1} curl:\n" +
              bad.str());

  const auto probe = probe_neumann(g);
  require(probe.norm < 1.0 && !probe.diverged, ErrorKind::NeumannDiverges,
          "|Q0| = " + std::to_string(probe.norm) + " at nu = " + std::to_string(g.nu) +
              "; the Neumann series for (1 - Q0)^{-1} does not converge, increase nu");

  CMatrix cross;
  std::vector<std::vector<std::size_t>> groups;
  if (g.k_cross && g.k_cross->norm() > 0.0) {
    cross = cross_product_matrix(table, *g.k_cross);
    groups = coupled_groups(cross, table.size());
  } else {
    for (std::size_t i = 0; i < table.size(); ++i) groups.push_back({i});
  }

  FieldHistory h = FieldHistory::zeros(g.grid, g.nu, g.table);
  h.diag.method = to_string(method);
  h.diag.neumann_norm = probe.norm;
  h.diag.neumann_terms = probe.terms;
  h.diag.neumann_deviation = probe.deviation;

  struct BlockStats {
    int iterations = 0;
    double contraction = 0.0;
    double ratio = 0.0;
  };
  std::vector<BlockStats> stats(groups.size());
  parallel_for(groups.size(), [&](std::size_t gi) {
    const auto blk = build_block(g, groups[gi], cross.size() > 0 ? &cross : nullptr);
    const auto d = static_cast<Eigen::Index>(blk.sys.dim());
    CMatrix x, db;
    if (method == Method::FixedPoint) {
      std::vector<CMatrix> mem = blk.sys.memory;
      if (blk.P.size() > 1) mem.pop_back();  // drop the bookkeeping slot
      std::optional<AbstractIVP> ivp;
      try {
        ivp.emplace(AbstractIVP::with_forcing(blk.sys.lead, MaterialSymbol(blk.sys.dim(), mem),
                                              CMatrix::Zero(d, d), g.grid, g.nu, blk.W0,
                                              blk.forcing));
      } catch (const Error& e) {
        throw Error(ErrorKind::InvalidArgument,
                    "fixed_point needs a selfadjoint positive lead (kappa0 + lambda) Mstar0: " +
                        std::string(e.what()));
      }
      auto rep = solve_fixed_point(*ivp, g.nu, g.tol.max_iter, g.tol.fp_tol);
      x = rep.solution.samples();
      const MaterialSymbol psym(blk.sys.dim(), blk.P);
      db = apply_symbol_causal(psym, rep.solution, require_zero_index(g.grid)).samples();
      stats[gi] = {rep.iterations, rep.contraction_estimate, rep.max_observed_ratio};
    } else {
      const WeightedSignal src =
          blk.forcing ? WeightedSignal::sampled(g.grid, g.nu, blk.sys.dim(),
                                                [&](double t) { return blk.forcing->value(t); })
                      : WeightedSignal::zeros(g.grid, g.nu, blk.sys.dim());
      const CMatrix states = descriptor_trajectory(blk.sys, g.grid, blk.W0, blk.forcing,
                                                   &src.samples(), method == Method::Exact);
      x = states.leftCols(d);
      db = CMatrix::Zero(x.rows(), d);
      for (std::size_t j = 0; j < blk.P.size(); ++j) {
        db += apply_matrix_rows(blk.P[j], states.middleCols(static_cast<Eigen::Index>(j) * d, d));
      }
    }
    for (std::size_t i = 0; i < blk.modes.size(); ++i) {
      const auto col = static_cast<Eigen::Index>(blk.modes[i]);
      const auto k = static_cast<Eigen::Index>(2 * i);
      h.E.col(col) = x.col(k);
      h.H.col(col) = x.col(k + 1);
      h.D.col(col) = db.col(k);
      h.B.col(col) = db.col(k + 1);
    }
  });
  for (const auto& st : stats) {
    h.diag.iterations = std::max(h.diag.iterations, st.iterations);
    h.diag.contraction_estimate = std::max(h.diag.contraction_estimate, st.contraction);
    h.diag.max_observed_ratio = std::max(h.diag.max_observed_ratio, st.ratio);
  }
  h.diag.residual = maxwell_residual(h, g.source, g.W0);
  h.diag.initial_value_error = initial_value_proxy(h, g.W0);
  h.diag.causality_sup = causality_sup(h);
  return h;
}

double uniqueness_energy_probe(const FieldHistory& h, const GeneralizedScenario& g) {
  const double e = weighted_l2(h.E, h.grid, h.nu);
  const double m = weighted_l2(h.H, h.grid, h.nu);
  return g.nu * (e * e + m * m);
}

}  // namespace dbf
