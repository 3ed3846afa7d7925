#include "dbf/curl_spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

namespace dbf {

namespace {

std::tuple<int, int, int, int, int> key(const IVec3& k, Helicity h, int component) {
  return {k[0], k[1], k[2], static_cast<int>(h), h == Helicity::Const ? component : -1};
}

void check_same_table(const ModeTablePtr& a, const ModeTablePtr& b) {
  require(a && b && (a == b || (a->K() == b->K() && a->size() == b->size())),
          ErrorKind::InvalidArgument, "fields live on different mode tables");
}

// Frame (e1, e2, khat) for a nonzero wavevector; e1 comes from the first
// coordinate axis that is not parallel to k.
std::pair<Eigen::Vector3d, Eigen::Vector3d> frame(const IVec3& k) {
  const Eigen::Vector3d kv(k[0], k[1], k[2]);
  const Eigen::Vector3d khat = kv.normalized();
  Eigen::Vector3d e1;
  for (int axis = 0; axis < 3; ++axis) {
    Eigen::Vector3d a = Eigen::Vector3d::Unit(axis);
    Eigen::Vector3d proj = a - a.dot(khat) * khat;
    if (proj.norm() > 1e-8) {
      e1 = proj.normalized();
      break;
    }
  }
  return {e1, khat.cross(e1)};
}

// exp(i k x_j) for |k| <= K on an n-point periodic grid, indexed [k + K][j].
std::vector<std::vector<cplx>> phase_table(int K, int n) {
  std::vector<std::vector<cplx>> out(2 * K + 1, std::vector<cplx>(n));
  for (int k = -K; k <= K; ++k) {
    for (int j = 0; j < n; ++j) {
      const double x = 2.0 * std::numbers::pi * j / n;
      out[k + K][j] = std::exp(kI * (static_cast<double>(k) * x));
    }
  }
  return out;
}

}  // namespace

std::string to_string(Helicity h) {
  switch (h) {
    case Helicity::Plus: return "plus";
    case Helicity::Minus: return "minus";
    case Helicity::Grad: return "grad";
    case Helicity::Const: return "const";
  }
  return "const";
}

Helicity helicity_from_string(const std::string& s) {
  if (s == "plus") return Helicity::Plus;
  if (s == "minus") return Helicity::Minus;
  if (s == "grad") return Helicity::Grad;
  if (s == "const") return Helicity::Const;
  throw Error(ErrorKind::Schema, "unknown helicity '" + s + "'");
}

CVec3 Mode::amplitude() const {
  if (helicity == Helicity::Const) return CVec3::Unit(component).cast<cplx>();
  const auto [e1, e2] = frame(k);
  if (helicity == Helicity::Grad) {
    return Eigen::Vector3d(k[0], k[1], k[2]).normalized().cast<cplx>();
  }
  const double sign = helicity == Helicity::Plus ? 1.0 : -1.0;
  return (e1.cast<cplx>() + sign * kI * e2.cast<cplx>()) / std::numbers::sqrt2;
}

ModeTable::ModeTable(int K, std::vector<Mode> modes) : K_(K), modes_(std::move(modes)) {
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    const auto& m = modes_[i];
    lookup_[key(m.k, m.helicity, m.component)] = i;
  }
}

std::size_t ModeTable::index_of(const IVec3& k, Helicity h, int component) const {
  auto it = lookup_.find(key(k, h, component));
  require(it != lookup_.end(), ErrorKind::InvalidArgument,
          "mode (" + std::to_string(k[0]) + "," + std::to_string(k[1]) + "," +
              std::to_string(k[2]) + ", " + to_string(h) + ") is not in the table");
  return it->second;
}

bool ModeTable::contains(const IVec3& k, Helicity h, int component) const {
  return lookup_.count(key(k, h, component)) > 0;
}

Eigen::VectorXd ModeTable::eigenvalues() const {
  Eigen::VectorXd out(modes_.size());
  for (std::size_t i = 0; i < modes_.size(); ++i) out(i) = modes_[i].eigenvalue;
  return out;
}

std::vector<std::size_t> ModeTable::kernel_modes(double eta, double kernel_tol) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (std::abs(1.0 + eta * modes_[i].eigenvalue) <= kernel_tol) out.push_back(i);
  }
  return out;
}

nlohmann::json ModeTable::to_json() const {
  nlohmann::json modes = nlohmann::json::array();
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    const auto& m = modes_[i];
    nlohmann::json entry = {{"index", i},
                            {"k", {m.k[0], m.k[1], m.k[2]}},
                            {"helicity", to_string(m.helicity)},
                            {"eigenvalue", m.eigenvalue}};
    if (m.helicity == Helicity::Const) entry["component"] = m.component;
    modes.push_back(std::move(entry));
  }
  return {{"K", K_}, {"mode_count", modes_.size()}, {"modes", std::move(modes)}};
}

ModeTablePtr build_basis(int K, std::size_t budget) {
  require(K >= 1, ErrorKind::InvalidArgument, "truncation K must be at least 1");
  std::vector<IVec3> ks;
  for (int x = -K; x <= K; ++x) {
    for (int y = -K; y <= K; ++y) {
      for (int z = -K; z <= K; ++z) {
        const int n2 = x * x + y * y + z * z;
        if (n2 > 0 && n2 <= K * K) ks.push_back({x, y, z});
      }
    }
  }
  const std::size_t count = 3 * ks.size() + 3;
  require(count <= budget, ErrorKind::TruncationTooLarge,
          "K = " + std::to_string(K) + " needs " + std::to_string(count) +
              " modes, budget is " + std::to_string(budget));
  std::sort(ks.begin(), ks.end(), [](const IVec3& a, const IVec3& b) {
    const int na = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
    const int nb = b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
    return std::tie(na, a) < std::tie(nb, b);
  });
  std::vector<Mode> modes;
  modes.reserve(count);
  for (int c = 0; c < 3; ++c) modes.push_back(Mode{{0, 0, 0}, Helicity::Const, 0.0, c});
  for (const auto& k : ks) {
    const double mag = std::sqrt(static_cast<double>(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
    modes.push_back(Mode{k, Helicity::Plus, mag, -1});
    modes.push_back(Mode{k, Helicity::Minus, -mag, -1});
    modes.push_back(Mode{k, Helicity::Grad, 0.0, -1});
  }
  return std::make_shared<const ModeTable>(K, std::move(modes));
}

// ---------------------------------------------------------------- fields

SpectralField SpectralField::zeros(ModeTablePtr table, std::string unit) {
  const auto n = static_cast<Eigen::Index>(table->size());
  return SpectralField{std::move(table), CVector::Zero(n), std::move(unit)};
}

bool SpectralField::is_real_representable(double tol) const {
  const auto& t = *table;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& m = t[i];
    const cplx c = coeffs(static_cast<Eigen::Index>(i));
    if (m.helicity == Helicity::Const) {
      if (std::abs(c.imag()) > tol) return false;
      continue;
    }
    const IVec3 mk{-m.k[0], -m.k[1], -m.k[2]};
    const cplx partner = coeffs(static_cast<Eigen::Index>(t.index_of(mk, m.helicity)));
    const cplx expected = m.helicity == Helicity::Grad ? -std::conj(c) : std::conj(c);
    if (std::abs(partner - expected) > tol) return false;
  }
  return true;
}

FieldPair::FieldPair(SpectralField e, SpectralField h) : e_part(std::move(e)), h_part(std::move(h)) {
  check_same_table(e_part.table, h_part.table);
}

FieldPair FieldPair::zeros(ModeTablePtr table) {
  return FieldPair(SpectralField::zeros(table), SpectralField::zeros(table));
}

cplx inner(const SpectralField& f, const SpectralField& g) {
  check_same_table(f.table, g.table);
  return f.coeffs.dot(g.coeffs);
}

cplx inner(const FieldPair& u, const FieldPair& v) {
  return inner(u.e_part, v.e_part) + inner(u.h_part, v.h_part);
}

SpectralField curl_apply(const SpectralField& f) {
  SpectralField out = f;
  out.coeffs = f.coeffs.cwiseProduct(f.table->eigenvalues().cast<cplx>());
  return out;
}

SpectralField projector_P(double eta, const SpectralField& f, double kernel_tol) {
  require(eta != 0.0, ErrorKind::InvalidArgument, "eta must be nonzero");
  SpectralField out = f;
  for (auto i : f.table->kernel_modes(eta, kernel_tol)) out.coeffs(static_cast<Eigen::Index>(i)) = 0.0;
  return out;
}

SpectralField reduced_resolvent(double eta, const SpectralField& f, double kernel_tol,
                                double range_tol) {
  require(eta != 0.0, ErrorKind::InvalidArgument, "eta must be nonzero");
  const auto& t = *f.table;
  const double scale = std::max(1.0, f.coeffs.norm());
  SpectralField out = f;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double s = 1.0 + eta * t[i].eigenvalue;
    if (std::abs(s) <= kernel_tol) {
      require(std::abs(f.coeffs(r)) <= range_tol * scale, ErrorKind::NotInRange,
              "coefficient " + std::to_string(std::abs(f.coeffs(r))) + " on kernel mode " +
                  std::to_string(i) + " (lambda = " + std::to_string(t[i].eigenvalue) + ")");
      out.coeffs(r) = 0.0;
    } else {
      out.coeffs(r) = f.coeffs(r) / s;
    }
  }
  return out;
}

FieldPair rotation_J(const FieldPair& u) {
  SpectralField e = u.h_part;
  e.coeffs = -u.h_part.coeffs;
  e.unit = u.e_part.unit;
  SpectralField h = u.e_part;
  h.unit = u.h_part.unit;
  return FieldPair(std::move(e), std::move(h));
}

FieldPair bounded_generator_C(double eta, const FieldPair& u, double kernel_tol, double range_tol) {
  // C = (1 + eta curl)^{-1} curl J on the range.
  FieldPair j = rotation_J(u);
  j.e_part = reduced_resolvent(eta, curl_apply(j.e_part), kernel_tol, range_tol);
  j.h_part = reduced_resolvent(eta, curl_apply(j.h_part), kernel_tol, range_tol);
  // Kernel checks above act on curl(.), so also enforce the range condition on u itself.
  reduced_resolvent(eta, u.e_part, kernel_tol, range_tol);
  reduced_resolvent(eta, u.h_part, kernel_tol, range_tol);
  return j;
}

double generator_norm(double eta, const ModeTable& table, double kernel_tol) {
  double best = 0.0;
  for (const auto& m : table.modes()) {
    const double s = 1.0 + eta * m.eigenvalue;
    if (std::abs(s) <= kernel_tol) continue;
    best = std::max(best, std::abs(m.eigenvalue / s));
  }
  return best;
}

// ------------------------------------------------------------ grid bridge

Eigen::MatrixX3cd synthesize_on_grid(const SpectralField& f, int n_grid) {
  const auto& t = *f.table;
  const int K = t.K();
  require(n_grid >= 2 * K + 2, ErrorKind::NyquistViolation,
          "n_grid = " + std::to_string(n_grid) + " must be at least 2K+2 = " +
              std::to_string(2 * K + 2));
  const auto ph = phase_table(K, n_grid);
  const std::size_t n = static_cast<std::size_t>(n_grid);
  Eigen::MatrixX3cd out = Eigen::MatrixX3cd::Zero(static_cast<Eigen::Index>(n * n * n), 3);
  for (std::size_t m = 0; m < t.size(); ++m) {
    const cplx c = f.coeffs(static_cast<Eigen::Index>(m));
    if (c == cplx(0.0)) continue;
    const auto& mode = t[m];
    const Eigen::RowVector3cd amp = (c * mode.amplitude()).transpose();
    const auto& px = ph[mode.k[0] + K];
    const auto& py = ph[mode.k[1] + K];
    const auto& pz = ph[mode.k[2] + K];
    for (std::size_t ix = 0; ix < n; ++ix) {
      for (std::size_t iy = 0; iy < n; ++iy) {
        const cplx pxy = px[ix] * py[iy];
        const std::size_t base = (ix * n + iy) * n;
        for (std::size_t iz = 0; iz < n; ++iz) {
          out.row(static_cast<Eigen::Index>(base + iz)) += (pxy * pz[iz]) * amp;
        }
      }
    }
  }
  return out;
}

CVector project_from_grid(const Eigen::MatrixX3cd& values, const ModeTable& table, int n_grid) {
  const int K = table.K();
  require(n_grid >= 2 * K + 2, ErrorKind::NyquistViolation, "grid too coarse for the table");
  const std::size_t n = static_cast<std::size_t>(n_grid);
  require(static_cast<std::size_t>(values.rows()) == n * n * n, ErrorKind::InvalidArgument,
          "grid sample count does not match n_grid");
  const auto ph = phase_table(K, n_grid);
  const double w = 1.0 / static_cast<double>(n * n * n);
  CVector out(table.size());
  for (std::size_t m = 0; m < table.size(); ++m) {
    const auto& mode = table[m];
    const CVec3 p = mode.amplitude();
    const auto& px = ph[mode.k[0] + K];
    const auto& py = ph[mode.k[1] + K];
    const auto& pz = ph[mode.k[2] + K];
    Eigen::RowVector3cd acc = Eigen::RowVector3cd::Zero();
    for (std::size_t ix = 0; ix < n; ++ix) {
      for (std::size_t iy = 0; iy < n; ++iy) {
        const cplx pxy = std::conj(px[ix] * py[iy]);
        const std::size_t base = (ix * n + iy) * n;
        for (std::size_t iz = 0; iz < n; ++iz) {
          acc += (pxy * std::conj(pz[iz])) * values.row(static_cast<Eigen::Index>(base + iz));
        }
      }
    }
    out(static_cast<Eigen::Index>(m)) = w * (p.adjoint() * acc.transpose())(0, 0);
  }
  return out;
}

CMatrix cross_product_matrix(const ModeTable& table, const Eigen::Vector3d& a) {
  auto shared = std::make_shared<const ModeTable>(table);
  const int n_grid = 2 * table.K() + 2;
  const Eigen::RowVector3cd av = a.cast<cplx>().transpose();
  const auto dim = static_cast<Eigen::Index>(table.size());
  CMatrix out(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    SpectralField f = SpectralField::zeros(shared);
    f.coeffs(j) = 1.0;
    Eigen::MatrixX3cd g = synthesize_on_grid(f, n_grid);
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const Eigen::RowVector3cd v = g.row(r);
      g.row(r) << av(1) * v(2) - av(2) * v(1), av(2) * v(0) - av(0) * v(2),
          av(0) * v(1) - av(1) * v(0);
    }
    out.col(j) = project_from_grid(g, table, n_grid);
  }
  return out;
}

}  // namespace dbf
