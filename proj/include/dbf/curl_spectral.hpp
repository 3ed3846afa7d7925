#pragma once

// Selfadjoint curl on the periodic torus [0, 2pi)^3, diagonalised by
// plane-wave helicity eigenfields
//
//   phi(x) = p(k, h) exp(i k.x),   curl phi = lambda phi,
//
// with lambda = +|k| (plus), -|k| (minus), 0 (grad, const). The L2 product is
// normalised by the torus volume so every mode has unit norm.

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbf/weighted_time.hpp"

namespace dbf {

enum class Helicity { Plus, Minus, Grad, Const };

std::string to_string(Helicity h);
Helicity helicity_from_string(const std::string& s);

using IVec3 = std::array<int, 3>;
using CVec3 = Eigen::Vector3cd;

struct Mode {
  IVec3 k{0, 0, 0};
  Helicity helicity = Helicity::Const;
  double eigenvalue = 0.0;
  int component = -1;  // 0..2 for const modes, -1 otherwise

  /// Vector amplitude p(k, helicity).
  CVec3 amplitude() const;
  int norm2() const { return k[0] * k[0] + k[1] * k[1] + k[2] * k[2]; }
};

class ModeTable {
 public:
  /// Default budget on the number of modes accepted by build_basis.
  static constexpr std::size_t kDefaultBudget = 20000;

  explicit ModeTable(int K, std::vector<Mode> modes);

  int K() const { return K_; }
  std::size_t size() const { return modes_.size(); }
  const Mode& operator[](std::size_t i) const { return modes_[i]; }
  const std::vector<Mode>& modes() const { return modes_; }

  /// Index of (k, helicity); const modes are addressed with k = 0 and `component`.
  std::size_t index_of(const IVec3& k, Helicity h, int component = -1) const;
  bool contains(const IVec3& k, Helicity h, int component = -1) const;

  /// Eigenvalues as a vector in mode order.
  Eigen::VectorXd eigenvalues() const;
  /// Indices of modes with |1 + eta lambda| <= kernel_tol.
  std::vector<std::size_t> kernel_modes(double eta, double kernel_tol = 1e-9) const;

  nlohmann::json to_json() const;

 private:
  int K_;
  std::vector<Mode> modes_;
  std::map<std::tuple<int, int, int, int, int>, std::size_t> lookup_;
};

using ModeTablePtr = std::shared_ptr<const ModeTable>;

ModeTablePtr build_basis(int K, std::size_t budget = ModeTable::kDefaultBudget);

struct SpectralField {
  ModeTablePtr table;
  CVector coeffs;
  std::string unit;

  static SpectralField zeros(ModeTablePtr table, std::string unit = "");
  /// Whether the coefficients describe a real vector field (to tolerance).
  bool is_real_representable(double tol = 1e-12) const;
};

struct FieldPair {
  SpectralField e_part;
  SpectralField h_part;

  FieldPair() = default;
  FieldPair(SpectralField e, SpectralField h);
  static FieldPair zeros(ModeTablePtr table);
  const ModeTablePtr& table() const { return e_part.table; }
};

/// L2 inner product <f, g> (conjugate-linear in f).
cplx inner(const SpectralField& f, const SpectralField& g);
cplx inner(const FieldPair& u, const FieldPair& v);

SpectralField curl_apply(const SpectralField& f);

/// Zeroes the modes in the kernel of 1 + eta curl.
SpectralField projector_P(double eta, const SpectralField& f, double kernel_tol = 1e-9);
/// (1 + eta curl)^{-1} on the range; throws NotInRange if kernel coefficients exceed
/// range_tol * max(1, |f|).
SpectralField reduced_resolvent(double eta, const SpectralField& f, double kernel_tol = 1e-9,
                                double range_tol = 1e-12);
/// J(e, h) = (-h, e).
FieldPair rotation_J(const FieldPair& u);
/// Per mode (e, h) -> c (-h, e), c = lambda / (1 + eta lambda).
FieldPair bounded_generator_C(double eta, const FieldPair& u, double kernel_tol = 1e-9,
                              double range_tol = 1e-12);
/// max over non-kernel modes of |lambda / (1 + eta lambda)|.
double generator_norm(double eta, const ModeTable& table, double kernel_tol = 1e-9);

/// Field values on an n^3 grid, x_j = 2 pi j / n. Layout: index (ix*n + iy)*n + iz,
/// one row per point, columns x, y, z.
Eigen::MatrixX3cd synthesize_on_grid(const SpectralField& f, int n_grid);
/// Galerkin projection of sampled grid values back onto the table (rectangle rule).
CVector project_from_grid(const Eigen::MatrixX3cd& values, const ModeTable& table, int n_grid);

/// Matrix of f -> a x f in the mode basis, assembled by grid quadrature.
CMatrix cross_product_matrix(const ModeTable& table, const Eigen::Vector3d& a);

}  // namespace dbf
