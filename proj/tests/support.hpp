#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's solvers.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "dbf/weighted_time.hpp"

namespace dbf::oracle {

using RhsFn = std::function<CVector(double, const CVector&)>;

/// Classical RK4 from t0 with step dt; returns the state at each requested time
/// (times must be increasing, >= t0 and multiples of dt away from t0).
inline std::vector<CVector> rk4(const RhsFn& f, CVector y, double t0, double dt,
                                const std::vector<double>& times) {
  std::vector<CVector> out;
  double t = t0;
  for (double target : times) {
    const auto steps = static_cast<long>(std::llround((target - t) / dt));
    for (long s = 0; s < steps; ++s) {
      const CVector k1 = f(t, y);
      const CVector k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
      const CVector k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
      const CVector k4 = f(t + dt, y + dt * k3);
      y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += dt;
    }
    t = target;
    out.push_back(y);
  }
  return out;
}

/// Random smooth causal signal: a few gaussian bumps and damped tones on t >= 0.
inline WeightedSignal random_signal(std::mt19937& rng, const TimeGrid& grid, double nu,
                                    std::size_t channels = 1) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double span = grid.time(grid.unpadded_end() - 1);
  struct Bump {
    double c, w, a, f;
    std::size_t ch;
  };
  std::vector<Bump> bumps;
  const int nb = 1 + static_cast<int>(U(rng) * 4);
  for (int b = 0; b < nb; ++b) {
    bumps.push_back({0.2 * span + 0.5 * span * U(rng), 0.2 + 0.8 * U(rng), -1.0 + 2.0 * U(rng),
                     3.0 * U(rng), static_cast<std::size_t>(U(rng) * channels) % channels});
  }
  return WeightedSignal::sampled(grid, nu, channels, [&](double t) {
    CVector v = CVector::Zero(static_cast<Eigen::Index>(channels));
    for (const auto& b : bumps) {
      const double g = std::exp(-0.5 * std::pow((t - b.c) / b.w, 2));
      v(static_cast<Eigen::Index>(b.ch)) += b.a * g * std::polar(1.0, b.f * t);
    }
    return v;
  });
}

/// Eighth-order central difference of a periodic sample line.
inline double fd8_weight(int j) {
  static const double w[5] = {0.0, 4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
  return j == 0 ? 0.0 : (j > 0 ? w[j] : -w[-j]);
}

/// Geometric curl of a grid field (layout (ix*n + iy)*n + iz) by eighth-order
/// periodic finite differences on [0, 2 pi)^3.
inline Eigen::MatrixX3cd fd_curl(const Eigen::MatrixX3cd& f, int n) {
  const double h = 2.0 * M_PI / n;
  auto idx = [n](int ix, int iy, int iz) {
    auto w = [n](int i) { return ((i % n) + n) % n; };
    return static_cast<Eigen::Index>((w(ix) * n + w(iy)) * n + w(iz));
  };
  Eigen::MatrixX3cd out = Eigen::MatrixX3cd::Zero(f.rows(), 3);
  for (int ix = 0; ix < n; ++ix)
    for (int iy = 0; iy < n; ++iy)
      for (int iz = 0; iz < n; ++iz) {
        // d[a](c): derivative of component c along axis a
        cplx d[3][3] = {};
        for (int j = -4; j <= 4; ++j) {
          if (j == 0) continue;
          const double w = fd8_weight(j) / h;
          for (int c = 0; c < 3; ++c) {
            d[0][c] += w * f(idx(ix + j, iy, iz), c);
            d[1][c] += w * f(idx(ix, iy + j, iz), c);
            d[2][c] += w * f(idx(ix, iy, iz + j), c);
          }
        }
        const auto r = idx(ix, iy, iz);
        out(r, 0) = d[1][2] - d[2][1];
        out(r, 1) = d[2][0] - d[0][2];
        out(r, 2) = d[0][1] - d[1][0];
      }
  return out;
}

}  // namespace dbf::oracle
