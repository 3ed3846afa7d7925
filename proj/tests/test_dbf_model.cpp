#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dbf/dbf_model.hpp"
#include "support.hpp"

using namespace dbf;

namespace {

CMatrix J2() {
  CMatrix j(2, 2);
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

DBFScenario base(int K, double eta, const TimeGrid& g, double nu = 1.0) {
  DBFScenario s;
  s.eta = eta;
  s.nu = nu;
  s.table = build_basis(K);
  s.grid = g;
  s.source = ModalSource::none(s.table);
  s.W0 = FieldPair::zeros(s.table);
  return s;
}

std::size_t plus100(const ModeTable& t) { return t.index_of({1, 0, 0}, Helicity::Plus); }

FieldPair random_pair(std::mt19937& rng, const ModeTablePtr& t) {
  std::normal_distribution<double> N;
  FieldPair p = FieldPair::zeros(t);
  for (Eigen::Index i = 0; i < p.e_part.coeffs.size(); ++i) {
    p.e_part.coeffs(i) = {N(rng), N(rng)};
    p.h_part.coeffs(i) = {N(rng), N(rng)};
  }
  return p;
}

void zero_modes(FieldPair& p, const std::vector<std::size_t>& modes) {
  for (auto m : modes) {
    p.e_part.coeffs(static_cast<Eigen::Index>(m)) = 0.0;
    p.h_part.coeffs(static_cast<Eigen::Index>(m)) = 0.0;
  }
}

}  // namespace

TEST(Naive, DegenerateExpansion) {
  const auto d = diagnose_naive_formulation(1.0, 1.0, 0.5);
  ASSERT_EQ(d.coefficients.size(), 3u);
  EXPECT_LT(d.coefficients[0].cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((d.coefficients[1] - 2.0 * J2()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(d.z1_real_part.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.verdict, "degenerate: fails strict positivity");
}

TEST(Naive, SecondOrderTerm) {
  struct P {
    double eps, mu, eta;
  };
  for (const P p : {P{1.0, 1.0, 0.5}, P{2.0, 0.5, 0.25}, P{3.0, 1.2, -0.7}}) {
    const auto d = diagnose_naive_formulation(p.eps, p.mu, p.eta);
    const double a = 1.0 / (p.eta * std::sqrt(p.eps * p.mu));
    const double aa = std::abs(a);
    EXPECT_LT(d.coefficients[0].cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((d.coefficients[1] - a * J2()).cwiseAbs().maxCoeff(), 1e-10 * aa);
    // (1 + w^2)^{-1} w^2 = w^2 + O(w^4), w = a z
    EXPECT_LT((d.coefficients[2] - a * a * CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-9 * a * a);
    EXPECT_TRUE(d.degenerate);
  }
  EXPECT_THROW(diagnose_naive_formulation(1.0, 1.0, 0.0), Error);
}

TEST(Naive, SymbolMatchesFormula) {
  const cplx z(0.03, -0.02);
  const double eps = 2.0, mu = 0.5, eta = 0.25;
  const cplx w = z / (eta * std::sqrt(eps * mu));
  CMatrix expect(2, 2);
  expect << w * w, -w, w, w * w;
  expect /= (1.0 + w * w);
  EXPECT_LT((naive_symbol(eps, mu, eta, z) - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DataRange, Examples) {
  std::mt19937 rng(3);
  const auto t1 = build_basis(1);
  const auto any = random_pair(rng, t1);
  ModalSource src{Waveform{Waveform::Kind::Step}, random_pair(rng, t1)};
  EXPECT_TRUE(check_data_range(0.5, src, any).ok);

  FieldPair w = FieldPair::zeros(t1);
  w.e_part.coeffs(static_cast<Eigen::Index>(plus100(*t1))) = 1.0;
  const auto v = check_data_range(-1.0, ModalSource::none(t1), w);
  EXPECT_FALSE(v.ok);
  ASSERT_EQ(v.offending.size(), 1u);
  EXPECT_EQ(v.offending[0], plus100(*t1));

  EXPECT_TRUE(check_data_range(-1.0, ModalSource::none(t1), FieldPair::zeros(t1)).ok);

  // kernel-supported source with a vanishing waveform is harmless
  ModalSource off{Waveform{}, w};
  EXPECT_TRUE(check_data_range(-1.0, off, FieldPair::zeros(t1)).ok);
  ModalSource on{Waveform{Waveform::Kind::Gaussian, 1.0, 1.0, 0.2}, w};
  EXPECT_FALSE(check_data_range(-1.0, on, FieldPair::zeros(t1)).ok);
}

TEST(Reduction, BlockCountsAndCouplings) {
  const TimeGrid g{-0.5, 0.01, 256, 0.5};
  auto s = base(2, 0.5, g);
  const auto blocks = assemble_reduced_ivp(s);
  EXPECT_EQ(blocks.size(), s.table->size() - 6);
  for (const auto& b : blocks) {
    const double lam = (*s.table)[b.mode].eigenvalue;
    EXPECT_NEAR(b.coupling, lam / (1.0 + 0.5 * lam), 1e-15);
    if (lam == 0.0) EXPECT_TRUE(b.ivp.M1.is_zero());
    if ((*s.table)[b.mode].helicity == Helicity::Plus && (*s.table)[b.mode].norm2() == 1) {
      EXPECT_NEAR(b.coupling, 2.0 / 3.0, 1e-15);
    }
  }
  auto k = base(1, -1.0, g);
  EXPECT_EQ(assemble_reduced_ivp(k).size(), 21u - 6u);
  k.W0.h_part.coeffs(static_cast<Eigen::Index>(plus100(*k.table))) = cplx(0.0, 1e-6);
  try {
    assemble_reduced_ivp(k);
    FAIL() << "expected RangeViolation";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RangeViolation);
  }
}

TEST(SolveDBF, ZeroDataGivesZero) {
  for (Method m : {Method::Exact, Method::Integrator, Method::FixedPoint}) {
    auto s = base(1, 0.5, {-0.5, 0.01, 512, 0.5}, 4.0);
    const auto h = solve_dbf(s, m);
    EXPECT_EQ(h.E.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(h.H.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(h.D.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(h.B.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(uniqueness_energy_probe(h, s), 0.0);
    EXPECT_EQ(verify_dbf_equation(h, s), 0.0);
  }
}

TEST(SolveDBF, SingleModeRotatesAtTwoThirds) {
  auto s = base(1, 0.5, {-1.0, 0.01, 2048, 0.25}, 0.5);
  const auto m = static_cast<Eigen::Index>(plus100(*s.table));
  s.W0.e_part.coeffs(m) = 1.0;
  const auto h = solve_dbf(s, Method::Exact);
  const double c = 2.0 / 3.0, e0 = 1.0 / 1.5;
  double err = 0.0;
  for (std::size_t i = s.grid.first_nonnegative(); i < s.grid.n_samples; ++i) {
    const double t = s.grid.time(i);
    const auto r = static_cast<Eigen::Index>(i);
    err = std::max({err, std::abs(h.E(r, m) - e0 * std::cos(c * t)),
                    std::abs(h.H(r, m) + e0 * std::sin(c * t))});
  }
  EXPECT_LT(err, 1e-12);
  EXPECT_LE(h.diag.initial_value_error, 1e-8);
  EXPECT_LE(h.diag.causality_sup, 1e-10);
  EXPECT_LE(verify_dbf_equation(h, s), 1e-8);
  // every other mode stays dark
  for (Eigen::Index j = 0; j < h.E.cols(); ++j) {
    if (j == m) continue;
    EXPECT_EQ(h.E.col(j).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(SolveDBF, ForcedModeMatchesRungeKutta) {
  // (D, B)' = (lambda H, -lambda E) + J on a minus mode, D = s eps E, B = s mu H
  auto s = base(2, 0.3, {-0.5, 0.01, 1600, 0.1}, 1.0);
  s.epsilon = 2.0;
  s.mu = 0.5;
  const auto m = static_cast<Eigen::Index>(s.table->index_of({1, 1, 0}, Helicity::Minus));
  const double lam = (*s.table)[static_cast<std::size_t>(m)].eigenvalue;
  const double sig = 1.0 + s.eta * lam;
  s.W0.e_part.coeffs(m) = cplx(0.5, 0.2);
  s.W0.h_part.coeffs(m) = -0.3;
  s.source.wf = Waveform{Waveform::Kind::Gaussian, 1.0, 3.0, 0.6};
  s.source.amplitude.e_part.coeffs(m) = 0.4;
  s.source.amplitude.h_part.coeffs(m) = cplx(0.0, 0.7);
  const auto h = solve_dbf(s, Method::Exact);

  const auto wf = s.source.wf;
  auto rhs = [&](double t, const CVector& y) -> CVector {
    const cplx E = y(0) / (sig * s.epsilon), H = y(1) / (sig * s.mu);
    CVector r(2);
    r << lam * H + wf.value(t) * s.source.amplitude.e_part.coeffs(m),
        -lam * E + wf.value(t) * s.source.amplitude.h_part.coeffs(m);
    return r;
  };
  CVector y0(2);
  y0 << s.W0.e_part.coeffs(m), s.W0.h_part.coeffs(m);
  std::vector<double> t;
  std::vector<std::size_t> idx;
  for (std::size_t i = s.grid.first_nonnegative(); i < s.grid.unpadded_end(); i += 25) {
    idx.push_back(i);
    t.push_back(s.grid.time(i));
  }
  const auto ref = oracle::rk4(rhs, y0, 0.0, 1e-4, t);
  double err = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(idx[k]);
    err = std::max({err, std::abs(h.D(r, m) - ref[k](0)), std::abs(h.B(r, m) - ref[k](1))});
  }
  EXPECT_LT(err, 1e-9);
  EXPECT_LE(h.diag.residual, 1e-6);
}

TEST(SolveDBF, FixedPointAtNuEightMatchesExact) {
  auto s = base(1, 0.5, {-0.1, 0.001, 2048, 0.4}, 8.0);
  s.W0.e_part.coeffs(static_cast<Eigen::Index>(plus100(*s.table))) = 1.0;
  const auto end = static_cast<Eigen::Index>(s.grid.unpadded_end());
  const auto ex = solve_dbf(s, Method::Exact);
  const auto fp = solve_dbf(s, Method::FixedPoint);
  EXPECT_LT((fp.E - ex.E).topRows(end).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((fp.H - ex.H).topRows(end).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_GT(fp.diag.iterations, 1);
  EXPECT_LE(fp.diag.initial_value_error, 10.0 * s.grid.dt);
}

TEST(SolveDBF, MethodsAgreeOnRandomData) {
  auto s = base(1, 0.5, {-0.1, 0.001, 2048, 0.4}, 8.0);
  std::mt19937 rng(11);
  s.W0 = random_pair(rng, s.table);
  s.source.wf = Waveform{Waveform::Kind::Gaussian, 1.0, 0.5, 0.3};
  s.source.amplitude = random_pair(rng, s.table);
  const auto end = static_cast<Eigen::Index>(s.grid.unpadded_end());
  const auto ex = solve_dbf(s, Method::Exact);
  for (Method m : {Method::FixedPoint, Method::Integrator}) {
    const auto h = solve_dbf(s, m);
    EXPECT_LT((h.E - ex.E).topRows(end).cwiseAbs().maxCoeff(), 1e-5) << to_string(m);
    EXPECT_LT((h.H - ex.H).topRows(end).cwiseAbs().maxCoeff(), 1e-5) << to_string(m);
    EXPECT_LE(h.diag.initial_value_error, 10.0 * s.grid.dt);
    EXPECT_LE(h.diag.causality_sup, 1e-10);
  }
}

TEST(SolveDBF, KernelModesStayZero) {
  auto s = base(2, -1.0, {-0.5, 0.01, 1024, 0.5}, 1.0);
  std::mt19937 rng(5);
  s.W0 = random_pair(rng, s.table);
  s.source.wf = Waveform{Waveform::Kind::Step};
  s.source.amplitude = random_pair(rng, s.table);
  const auto kernel = s.table->kernel_modes(-1.0);
  ASSERT_EQ(kernel.size(), 6u);
  zero_modes(s.W0, kernel);
  zero_modes(s.source.amplitude, kernel);
  const auto h = solve_dbf(s, Method::Exact);
  EXPECT_EQ(h.kernel_modes, kernel);
  for (auto k : kernel) {
    const auto c = static_cast<Eigen::Index>(k);
    EXPECT_EQ(h.E.col(c).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(h.H.col(c).cwiseAbs().maxCoeff(), 0.0);
  }
  EXPECT_LE(h.diag.residual, 1e-6);
  EXPECT_LE(h.diag.initial_value_error, 1e-8);
}

TEST(SolveDBF, NearKernelForcesExactMethod) {
  auto s = base(1, -1.0 / (1.0 + 1e-4), {-0.5, 0.01, 512, 0.5}, 8.0);
  s.W0.e_part.coeffs(static_cast<Eigen::Index>(plus100(*s.table))) = 1.0;
  const auto h = solve_dbf(s, Method::FixedPoint);
  EXPECT_EQ(h.diag.warnings.size(), 6u);
  EXPECT_NE(h.diag.warnings[0].find("near-kernel"), std::string::npos);
  EXPECT_TRUE(h.kernel_modes.empty());
  EXPECT_LE(h.diag.initial_value_error, 1e-8);
}

TEST(SolveDBF, LinearInData) {
  auto s = base(1, 0.5, {-0.5, 0.01, 1024, 0.5}, 1.0);
  std::mt19937 rng(13);
  s.W0 = random_pair(rng, s.table);
  const auto h1 = solve_dbf(s, Method::Exact);
  s.W0.e_part.coeffs *= 2.0;
  s.W0.h_part.coeffs *= 2.0;
  const auto h2 = solve_dbf(s, Method::Exact);
  EXPECT_LT((h2.E - 2.0 * h1.E).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((h2.H - 2.0 * h1.H).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RecoverDB, Examples) {
  auto s = base(2, 0.5, {0.0, 0.01, 16, 0.5});
  s.epsilon = 2.0;
  s.mu = 3.0;
  std::mt19937 rng(17);
  FieldPair eh = random_pair(rng, s.table);
  const auto db = recover_DB(eh, s);
  for (std::size_t i = 0; i < s.table->size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double lam = (*s.table)[i].eigenvalue;
    EXPECT_LT(std::abs(db.e_part.coeffs(r) - (1.0 + 0.5 * lam) * 2.0 * eh.e_part.coeffs(r)),
              1e-14 * (1.0 + std::abs(db.e_part.coeffs(r))));
    EXPECT_LT(std::abs(db.h_part.coeffs(r) - (1.0 + 0.5 * lam) * 3.0 * eh.h_part.coeffs(r)),
              1e-14 * (1.0 + std::abs(db.h_part.coeffs(r))));
    if (lam == 0.0) {
      EXPECT_EQ(db.e_part.coeffs(r), 2.0 * eh.e_part.coeffs(r));
    }
  }
  const auto m = static_cast<Eigen::Index>(plus100(*s.table));
  EXPECT_NEAR(std::abs(db.e_part.coeffs(m) - 1.5 * 2.0 * eh.e_part.coeffs(m)), 0.0, 1e-15);

  const auto kernel = s.table->kernel_modes(0.5);
  const SpectralField back_e = reduced_resolvent(0.5, db.e_part);
  const SpectralField back_h = reduced_resolvent(0.5, db.h_part);
  const auto pe = projector_P(0.5, eh.e_part);
  const auto ph = projector_P(0.5, eh.h_part);
  EXPECT_LT((back_e.coeffs / 2.0 - pe.coeffs).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((back_h.coeffs / 3.0 - ph.coeffs).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Verification, ResidualDetectsCorruption) {
  auto s = base(1, 0.5, {-1.0, 0.01, 2048, 0.25}, 0.5);
  s.W0.e_part.coeffs(static_cast<Eigen::Index>(plus100(*s.table))) = 1.0;
  auto h = solve_dbf(s, Method::Exact);
  EXPECT_LE(verify_dbf_equation(h, s), 1e-8);
  h.E *= 1.01;
  recover_DB(h, s);
  EXPECT_GT(verify_dbf_equation(h, s), 1e-3);
}

TEST(Verification, UniquenessProbe) {
  auto s = base(1, -1.0, {-0.5, 0.01, 512, 0.5}, 1.0);
  auto h = FieldHistory::zeros(s.grid, s.nu, s.table);
  EXPECT_EQ(uniqueness_energy_probe(h, s), 0.0);
  // injected field, not a solution of the zero-data problem
  const auto m = static_cast<Eigen::Index>(s.table->index_of({0, 1, 0}, Helicity::Minus));
  for (std::size_t i = s.grid.first_nonnegative(); i < s.grid.n_samples; ++i) {
    h.E(static_cast<Eigen::Index>(i), m) = std::exp(-s.grid.time(i));
  }
  EXPECT_GT(uniqueness_energy_probe(h, s), 0.0);
  auto k = FieldHistory::zeros(s.grid, s.nu, s.table);
  k.H(10, static_cast<Eigen::Index>(plus100(*s.table))) = 1e-3;
  EXPECT_GE(uniqueness_energy_probe(k, s), 1e-3);

  // the rotation block contributes nothing to the real part of the pairing
  std::mt19937 rng(19);
  const auto u = random_pair(rng, build_basis(2));
  FieldPair pu{projector_P(0.5, u.e_part), projector_P(0.5, u.h_part)};
  EXPECT_LE(std::abs(inner(pu, bounded_generator_C(0.5, pu)).real()), 1e-12);
}

TEST(Verification, ProjectorIdentities) {
  std::mt19937 rng(23);
  const auto t = build_basis(2);
  for (double eta : {-1.0, 0.5, -1.0 / std::sqrt(2.0), 0.37}) {
    for (int trial = 0; trial < 4; ++trial) {
      const auto f = random_pair(rng, t).e_part;
      EXPECT_LE(projector_identity_defect(eta, f), 1e-12 * std::max(1.0, 1.0 / std::abs(eta)) *
                                                       (1.0 + f.coeffs.cwiseAbs().maxCoeff()));
    }
  }
}
