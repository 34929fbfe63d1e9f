#include "qip/synthesis.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qip/errors.hpp"

namespace qip {
namespace {

using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

void require_square(const Matrix& a, const char* what) {
  require_finite(a, what);
  if (a.rows() != a.cols()) throw InvalidArgument(std::string(what) + ": must be square");
}

void require_single_input(const Matrix& a, const Matrix& b) {
  require_finite(b, "B");
  if (b.rows() != a.rows() || b.cols() != 1) {
    throw InvalidArgument("B must be a single column conformant with A");
  }
}

double max_real_part(const Spectrum& s) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& z : s) worst = std::max(worst, z.real());
  return worst;
}

// Solves AᵀX + XA + W = 0 for symmetric W through the Kronecker form; the
// state dimensions here are small enough that the n²×n² system is cheap.
Matrix solve_lyapunov(const Matrix& a, const Matrix& w) {
  const Eigen::Index n = a.rows();
  const Matrix at = a.transpose();
  Matrix kron = Matrix::Zero(n * n, n * n);
  // vec(AᵀX) = (I ⊗ Aᵀ) vec(X), vec(XA) = (Aᵀ ⊗ I) vec(X), column-major vec.
  for (Eigen::Index j = 0; j < n; ++j) {
    kron.block(j * n, j * n, n, n) += at;
    for (Eigen::Index i = 0; i < n; ++i) {
      kron.block(i * n, j * n, n, n).diagonal().array() += at(i, j);
    }
  }
  const Vector rhs = -Eigen::Map<const Vector>(w.data(), n * n);
  const Vector x = lu_solve(kron, rhs);
  Matrix sol = Eigen::Map<const Matrix>(x.data(), n, n);
  return 0.5 * (sol + sol.transpose());
}

Matrix sign_function_care(const Matrix& a, const Matrix& g, const Matrix& q) {
  const Eigen::Index n = a.rows();
  Matrix z(2 * n, 2 * n);
  z << a, -g, -q, -a.transpose();

  const double dim = static_cast<double>(2 * n);
  bool converged = false;
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::PartialPivLU<Matrix> lu(z);
    double log_det = 0.0;
    const Matrix& factors = lu.matrixLU();
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double pivot = std::abs(factors(i, i));
      if (!(pivot > 0.0) || !std::isfinite(pivot)) {
        throw NotStabilizable("solve_care: Hamiltonian has an eigenvalue at zero");
      }
      log_det += std::log(pivot);
    }
    const double c = std::exp(log_det / dim);
    const Matrix next = 0.5 * (z / c + c * lu.inverse());
    if (!next.allFinite()) throw NotStabilizable("solve_care: sign iteration diverged");
    const double change = (next - z).lpNorm<1>();
    z = next;
    if (change <= 1e-12 * z.lpNorm<1>()) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NotStabilizable("solve_care: Hamiltonian has eigenvalues on the imaginary axis");
  }

  // Stable invariant subspace is ker(sign(H) + I), spanned by [I; P].
  Matrix lhs(2 * n, n);
  Matrix rhs(2 * n, n);
  lhs << z.block(0, n, n, n), z.block(n, n, n, n) + Matrix::Identity(n, n);
  rhs << z.block(0, 0, n, n) + Matrix::Identity(n, n), z.block(n, 0, n, n);
  Matrix p = lhs.colPivHouseholderQr().solve(-rhs);
  return 0.5 * (p + p.transpose());
}

}  // namespace

LqrWeights LqrWeights::position_heavy(int state_dim) {
  LqrWeights w;
  w.q = Matrix::Zero(state_dim, state_dim);
  for (int i = 0; i < state_dim; ++i) w.q(i, i) = (i % 2 == 0) ? 10.0 : 1.0;
  w.r = Matrix::Identity(1, 1);
  return w;
}

void LqrWeights::validate(int state_dim) const {
  require_finite(q, "lqr.Q");
  require_finite(r, "lqr.R");
  if (q.rows() != state_dim || q.cols() != state_dim) {
    throw InvalidArgument("lqr.Q: expected " + std::to_string(state_dim) + "x" +
                          std::to_string(state_dim));
  }
  if (r.rows() != 1 || r.cols() != 1) throw InvalidArgument("lqr.R: expected 1x1");
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, q.cwiseAbs().maxCoeff())) {
    throw InvalidArgument("lqr.Q: must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(q, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12) {
    throw InvalidArgument("lqr.Q: must be positive semidefinite");
  }
  if (!(r(0, 0) > 0.0)) throw InvalidArgument("lqr.R: must be positive");
}

void PoleDesign::validate() const {
  if (!(percent_overshoot > 0.0 && percent_overshoot < 100.0)) {
    throw InvalidDesign("pole_placement.po: overshoot must lie in (0, 100) %");
  }
  if (!(settling_time > 0.0) || !std::isfinite(settling_time)) {
    throw InvalidDesign("pole_placement.ts: settling time must be positive");
  }
  if (!(spread > 1.0) || !std::isfinite(spread)) {
    throw InvalidDesign("pole_placement.spread: must exceed 1");
  }
  if (!(far_pole_spacing >= 0.0) || !std::isfinite(far_pole_spacing)) {
    throw InvalidDesign("pole_placement.far_pole_spacing: must be non-negative");
  }
}

std::string to_string(Method m) {
  return m == Method::kLqr ? "lqr" : "pole-placement";
}

Method method_from_string(const std::string& s) {
  if (s == "lqr") return Method::kLqr;
  if (s == "pole-placement" || s == "pp") return Method::kPolePlacement;
  throw InvalidArgument("unknown synthesis method '" + s + "'");
}

namespace {

using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// PA + AᵀP − PBR⁻¹BᵀP + Q in extended precision. For large ‖P‖ the quadratic
// term cancels against the rest, and double evaluation alone would leave a
// floor of order ε‖P‖²‖G‖.
Matrix care_residual_matrix(const Matrix& a, const Matrix& b, const Matrix& q,
                            const Matrix& r, const Matrix& p) {
  const LongMatrix al = a.cast<long double>();
  const LongMatrix bl = b.cast<long double>();
  const LongMatrix pl = p.cast<long double>();
  const LongMatrix pb = pl * bl;
  const LongMatrix k = r.cast<long double>().fullPivLu().solve(pb.transpose());
  const LongMatrix res = pl * al + al.transpose() * pl - pb * k + q.cast<long double>();
  return res.cast<double>();
}

}  // namespace

double care_residual(const Matrix& a, const Matrix& b, const Matrix& q,
                     const Matrix& r, const Matrix& p) {
  return inf_norm(care_residual_matrix(a, b, q, r, p));
}

Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q,
                  const Matrix& r) {
  require_square(a, "solve_care A");
  require_finite(b, "solve_care B");
  if (b.rows() != a.rows()) throw InvalidArgument("solve_care: B rows must match A");
  if (q.rows() != a.rows() || q.cols() != a.cols()) {
    throw InvalidArgument("solve_care: Q must match A");
  }
  if (r.rows() != b.cols() || r.cols() != b.cols()) {
    throw InvalidArgument("solve_care: R must be square with B's column count");
  }
  Eigen::LLT<Matrix> r_chol(r);
  if (r_chol.info() != Eigen::Success) throw InvalidArgument("solve_care: R must be positive definite");

  const Matrix r_inv_bt = r_chol.solve(b.transpose());
  const Matrix g = b * r_inv_bt;

  Matrix p = sign_function_care(a, g, q);
  double residual = care_residual(a, b, q, r, p);

  // Newton-Kleinman polish in correction form: (A−GP)ᵀΔ + Δ(A−GP) + Res(P) = 0.
  // Solving for the small correction keeps the rounding relative to Δ, not P.
  for (int step = 0; step < 20 && residual > 0.0; ++step) {
    const Matrix closed = a - g * p;
    if (max_real_part(eigenvalues(closed)) >= 0.0) break;
    const Matrix res = care_residual_matrix(a, b, q, r, p);
    Matrix delta;
    try {
      delta = solve_lyapunov(closed, 0.5 * (res + res.transpose()));
    } catch (const SingularMatrix&) {
      break;
    }
    const Matrix candidate = p + delta;
    const double candidate_residual = care_residual(a, b, q, r, candidate);
    if (!(candidate_residual < residual)) break;
    p = candidate;
    residual = candidate_residual;
  }

  if (!p.allFinite() || max_real_part(eigenvalues(a - g * p)) >= 0.0) {
    throw NotStabilizable("solve_care: no stabilizing solution (is (A, B) stabilizable?)");
  }
  return p;
}

Gains lqr_gain(const Matrix& a, const Matrix& b, const Matrix& c,
               const LqrWeights& weights) {
  require_square(a, "lqr A");
  require_single_input(a, b);
  weights.validate(static_cast<int>(a.rows()));

  const Matrix p = solve_care(a, b, weights.q, weights.r);
  Gains gains;
  gains.method = Method::kLqr;
  gains.k = lu_solve(weights.r, b.transpose() * p);
  gains.closed_loop_poles = eigenvalues(a - b * gains.k);
  gains.riccati_residual = care_residual(a, b, weights.q, weights.r, p);
  if (max_real_part(gains.closed_loop_poles) >= 0.0) {
    throw NotStabilizable("lqr_gain: closed loop is not Hurwitz");
  }
  gains.n = precompensation_gain(a, b, c, gains.k);
  return gains;
}

DominantPair dominant_poles(double percent_overshoot, double settling_time) {
  PoleDesign{percent_overshoot, settling_time}.validate();
  const double log_po = std::log(percent_overshoot / 100.0);
  const double pi = std::numbers::pi;
  DominantPair pair;
  pair.damping_ratio = std::abs(log_po) / std::sqrt(pi * pi + log_po * log_po);
  pair.natural_frequency = 4.0 / (pair.damping_ratio * settling_time);
  const double zeta = pair.damping_ratio;
  const double wn = pair.natural_frequency;
  // ζ < 1 for every overshoot in (0, 100), so the pair is complex.
  pair.pole = {-zeta * wn, wn * std::sqrt(1.0 - zeta * zeta)};
  return pair;
}

Spectrum second_order_poles(const PoleDesign& design, int total) {
  design.validate();
  if (total < 2) throw InvalidDesign("second_order_poles: need at least two poles");
  const DominantPair pair = dominant_poles(design.percent_overshoot, design.settling_time);
  Spectrum poles{pair.pole, std::conj(pair.pole)};
  const double base = design.spread * pair.pole.real();
  for (int k = 0; k < total - 2; ++k) {
    poles.emplace_back(base * (1.0 + design.far_pole_spacing * k), 0.0);
  }
  return poles;
}

Gains place_poles(const Matrix& a, const Matrix& b, const Matrix& c,
                  const Spectrum& desired) {
  require_square(a, "place_poles A");
  require_single_input(a, b);
  const Eigen::Index n = a.rows();
  if (static_cast<Eigen::Index>(desired.size()) != n) {
    throw InvalidArgument("place_poles: need exactly " + std::to_string(n) + " poles");
  }
  // Closed under conjugation: every pole must have a partner.
  {
    std::vector<bool> used(desired.size(), false);
    for (std::size_t i = 0; i < desired.size(); ++i) {
      if (used[i]) continue;
      used[i] = true;
      if (desired[i].imag() == 0.0) continue;
      bool found = false;
      for (std::size_t j = i + 1; j < desired.size() && !found; ++j) {
        if (!used[j] && std::abs(desired[j] - std::conj(desired[i])) <=
                            1e-12 * std::max(1.0, std::abs(desired[i]))) {
          used[j] = true;
          found = true;
        }
      }
      if (!found) throw InvalidArgument("place_poles: desired poles not closed under conjugation");
    }
  }

  const Matrix ctrb = controllability_matrix(a, b);
  const RankEstimate rank = numerical_rank(ctrb);
  if (rank.rank < n) {
    throw Uncontrollable("place_poles: controllability matrix has rank " +
                         std::to_string(rank.rank) + " < " + std::to_string(n));
  }

  // Time-scale by ω so the Krylov columns and polynomial coefficients stay
  // near unity: placing p/ω for (A/ω, B/ω) yields the same K.
  long double omega = 0.0L;
  for (const auto& z : desired) omega = std::max<long double>(omega, std::abs(z));
  if (omega == 0.0L) omega = 1.0L;

  const LongMatrix as = a.cast<long double>() / omega;
  const LongVector bs = b.col(0).cast<long double>() / omega;

  // Desired characteristic polynomial, highest power first.
  std::vector<std::complex<long double>> poly{1.0L};
  for (const auto& z : desired) {
    const std::complex<long double> root(z.real(), z.imag());
    std::vector<std::complex<long double>> next(poly.size() + 1, 0.0L);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] += poly[i];
      next[i + 1] -= poly[i] * (root / omega);
    }
    poly = std::move(next);
  }

  LongMatrix ctrb_scaled(n, n);
  ctrb_scaled.col(0) = bs;
  for (Eigen::Index k = 1; k < n; ++k) ctrb_scaled.col(k) = as * ctrb_scaled.col(k - 1);

  LongMatrix phi = LongMatrix::Zero(n, n);
  for (const auto& coeff : poly) {
    phi = phi * as;
    phi.diagonal().array() += coeff.real();
  }

  LongVector last = LongVector::Zero(n);
  last(n - 1) = 1.0L;
  const LongVector selector = ctrb_scaled.transpose().fullPivLu().solve(last);
  const Eigen::Matrix<long double, 1, Eigen::Dynamic> k_long = selector.transpose() * phi;

  Gains gains;
  gains.method = Method::kPolePlacement;
  gains.k = k_long.cast<double>();
  if (!gains.k.allFinite()) throw Uncontrollable("place_poles: non-finite gain");
  gains.controllability_ratio = rank.sigma_ratio;
  gains.ill_conditioned = rank.sigma_ratio < 1e-6;
  gains.closed_loop_poles = eigenvalues(a - b * gains.k);
  gains.placement_error = spectrum_mismatch(gains.closed_loop_poles, desired);
  if (max_real_part(gains.closed_loop_poles) >= 0.0) {
    throw NotStabilizable("place_poles: achieved closed loop is not Hurwitz");
  }
  gains.n = precompensation_gain(a, b, c, gains.k);
  return gains;
}

double precompensation_gain(const Matrix& a, const Matrix& b, const Matrix& c,
                            const RowVector& k) {
  require_square(a, "precompensation A");
  require_single_input(a, b);
  if (c.rows() != 1 || c.cols() != a.rows()) {
    throw InvalidArgument("precompensation: C must be a conformant row");
  }
  if (k.size() != a.rows()) throw InvalidArgument("precompensation: K length mismatch");
  const Matrix closed = a - b * k;
  const double dc = (c * lu_solve(closed, b))(0, 0);
  if (std::abs(dc) < 1e-12) {
    throw ZeroDcGain("precompensation: C(A - BK)^-1 B vanishes");
  }
  return -1.0 / dc;
}

}  // namespace qip
