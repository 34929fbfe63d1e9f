// Independent oracles and generators shared by the unit and acceptance tests.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "qip/dynamics.hpp"
#include "qip/linalg.hpp"

namespace qip::oracle {

inline PlantParams rod_cart_pole(double cart = 1.0, double m = 0.1, double l = 0.1,
                                 double g = 9.81) {
  PlantParams p;
  p.links = 1;
  p.cart_mass = cart;
  p.masses = {m};
  p.lengths = {l};
  p.gravity = g;
  return p;
}

// Hand linearization of the single uniform rod on a cart about θ = 0:
//   [M+m, −ml/2; −ml/2, ml²/3] q̈ = [F; (mgl/2) θ]
struct ClosedFormLinearization {
  Matrix a;
  Matrix b;
};

inline ClosedFormLinearization rod_cart_pole_linearization(double cart, double m, double l,
                                                           double g) {
  const double a11 = cart + m;
  const double a12 = -m * l / 2.0;
  const double a22 = m * l * l / 3.0;
  const double k = m * g * l / 2.0;
  const double det = a11 * a22 - a12 * a12;
  ClosedFormLinearization out;
  out.a = Matrix::Zero(4, 4);
  out.b = Matrix::Zero(4, 1);
  out.a(0, 1) = 1.0;
  out.a(2, 3) = 1.0;
  out.a(1, 2) = -a12 * k / det;
  out.a(3, 2) = a11 * k / det;
  out.b(1, 0) = a22 / det;
  out.b(3, 0) = -a12 / det;
  return out;
}

// Full nonlinear cart-pole accelerations at any angle, by Cramer's rule on
// the hand-derived 2×2 system.
inline Eigen::Vector2d rod_cart_pole_accel(double theta, double theta_dot, double force,
                                           double cart, double m, double l, double g) {
  const double h = l / 2.0;
  const double a11 = cart + m;
  const double a12 = -m * h * std::cos(theta);
  const double a22 = m * l * l / 3.0;
  const double r1 = force - m * h * std::sin(theta) * theta_dot * theta_dot;
  const double r2 = m * g * h * std::sin(theta);
  const double det = a11 * a22 - a12 * a12;
  return {(r1 * a22 - a12 * r2) / det, (a11 * r2 - a12 * r1) / det};
}

// Test-local kinetic and potential energy of the n-link chain, written from
// the point-mass-plus-rod-inertia model directly in terms of joint velocities.
inline double oracle_kinetic(const Vector& q, const Vector& qd, const PlantParams& p) {
  double t = 0.5 * p.cart_mass * qd(0) * qd(0);
  double tip_vx = qd(0), tip_vy = 0.0;
  double phi = 0.0, phid = 0.0;
  for (int i = 0; i < p.links; ++i) {
    phi += q(i + 1);
    phid += qd(i + 1);
    const double l = p.lengths[i];
    const double m = p.masses[i];
    const double cx_v = tip_vx - 0.5 * l * std::cos(phi) * phid;
    const double cy_v = tip_vy - 0.5 * l * std::sin(phi) * phid;
    t += 0.5 * m * (cx_v * cx_v + cy_v * cy_v) + 0.5 * (m * l * l / 12.0) * phid * phid;
    tip_vx -= l * std::cos(phi) * phid;
    tip_vy -= l * std::sin(phi) * phid;
  }
  return t;
}

inline double oracle_potential(const Vector& q, const PlantParams& p) {
  double v = 0.0, base_y = 0.0, phi = 0.0;
  for (int i = 0; i < p.links; ++i) {
    phi += q(i + 1);
    const double l = p.lengths[i];
    v += p.masses[i] * p.gravity * (base_y + 0.5 * l * std::cos(phi));
    base_y += l * std::cos(phi);
  }
  return v;
}

// Exact zero-order-hold discretization via the augmented matrix exponential.
inline std::pair<Matrix, Matrix> zoh_discretize(const Matrix& a, const Matrix& b, double dt) {
  const Eigen::Index n = a.rows(), m = b.cols();
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = a * dt;
  aug.topRightCorner(n, m) = b * dt;
  const Matrix e = aug.exp();
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                            double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double floor = 0.1) {
  const Matrix g = random_matrix(rng, n, n);
  return g * g.transpose() / static_cast<double>(n) + floor * Matrix::Identity(n, n);
}

// Bottleneck assignment by bitmask DP: the pairing that minimizes the worst
// relative error max|λ−μ|/max(1,|μ|). Exact for up to ~16 poles.
inline double optimal_pairing_error(const Spectrum& got, const Spectrum& want) {
  const std::size_t n = want.size();
  if (got.size() != n || n > 16) return std::numeric_limits<double>::infinity();
  std::vector<double> best(std::size_t{1} << n, std::numeric_limits<double>::infinity());
  best[0] = 0.0;
  for (std::size_t mask = 0; mask < best.size(); ++mask) {
    if (!std::isfinite(best[mask])) continue;
    const std::size_t i = static_cast<std::size_t>(__builtin_popcountll(mask));
    if (i == n) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask & (std::size_t{1} << j)) continue;
      const double e = std::abs(got[i] - want[j]) / std::max(1.0, std::abs(want[j]));
      const std::size_t next = mask | (std::size_t{1} << j);
      best[next] = std::min(best[next], std::max(best[mask], e));
    }
  }
  return best.back();
}

// ‖PA + AᵀP − PBR⁻¹BᵀP + Q‖∞ evaluated in long double, independent of the
// library's own residual.
inline double oracle_care_residual(const Matrix& a, const Matrix& b, const Matrix& q,
                                   const Matrix& r, const Matrix& p) {
  using L = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const L pl = p.cast<long double>();
  const L pb = pl * b.cast<long double>();
  const L g = pb * r.cast<long double>().inverse() * pb.transpose();
  const L res = pl * a.cast<long double>() + a.cast<long double>().transpose() * pl - g +
                q.cast<long double>();
  return static_cast<double>(res.cwiseAbs().rowwise().sum().maxCoeff());
}

}  // namespace qip::oracle
