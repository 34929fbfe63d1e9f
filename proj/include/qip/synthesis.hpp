#pragma once

#include <complex>
#include <optional>
#include <string>

#include "qip/linalg.hpp"

namespace qip {

/// Quadratic cost weights for ∫ xᵀQx + uᵀRu dt.
struct LqrWeights {
  Matrix q;
  Matrix r;

  /// Weight 10 on every position/angle and 1 on every rate (interleaved
  /// layout), R = [1].
  static LqrWeights position_heavy(int state_dim);

  void validate(int state_dim) const;
};

/// Closed-loop pole design from a second-order step-response target.
struct PoleDesign {
  double percent_overshoot = 1.0;  // %
  double settling_time = 6.0;      // s, 2% criterion
  /// Far poles start at spread·Re(s₁).
  double spread = 10.0;
  /// Far pole k (k = 0, 1, ...) sits at spread·Re(s₁)·(1 + far_pole_spacing·k).
  double far_pole_spacing = 0.2;

  void validate() const;
};

struct DominantPair {
  double damping_ratio = 0.0;
  double natural_frequency = 0.0;
  std::complex<double> pole;  // upper half-plane member of the pair
};

enum class Method { kLqr, kPolePlacement };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

/// State feedback u = N·r − K·x plus synthesis diagnostics.
struct Gains {
  Method method = Method::kLqr;
  RowVector k;
  double n = 0.0;
  Spectrum closed_loop_poles;
  std::optional<double> riccati_residual;        // LQR only, ‖·‖∞
  std::optional<double> controllability_ratio;   // pole placement only
  std::optional<double> placement_error;         // pole placement only
  bool ill_conditioned = false;
};

/// Stabilizing solution P of PA + AᵀP − PBR⁻¹BᵀP + Q = 0.
/// Matrix-sign-function solve of the Hamiltonian, polished by
/// Newton-Kleinman steps. Throws NotStabilizable when no stabilizing
/// solution exists.
Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q,
                  const Matrix& r);

/// ‖PA + AᵀP − PBR⁻¹BᵀP + Q‖∞.
double care_residual(const Matrix& a, const Matrix& b, const Matrix& q,
                     const Matrix& r, const Matrix& p);

/// K = R⁻¹BᵀP with P from solve_care, plus N for output row `c`.
Gains lqr_gain(const Matrix& a, const Matrix& b, const Matrix& c,
               const LqrWeights& weights);

/// Damping ratio and natural frequency for a given overshoot and 2%
/// settling time, and the resulting dominant pole.
DominantPair dominant_poles(double percent_overshoot, double settling_time);

/// The dominant pair followed by total−2 real far poles.
Spectrum second_order_poles(const PoleDesign& design, int total);

/// Single-input placement by Ackermann's formula, evaluated in extended
/// precision: the Krylov matrix of a 10-state chain is graded over many
/// decades and the clustered far poles are very sensitive to K.
/// Throws Uncontrollable if (A, B) loses rank, NotStabilizable if the
/// achieved closed loop is not Hurwitz.
Gains place_poles(const Matrix& a, const Matrix& b, const Matrix& c,
                  const Spectrum& desired);

/// N = [−C(A − BK)⁻¹B]⁻¹. Throws ZeroDcGain if C(A − BK)⁻¹B ≈ 0.
double precompensation_gain(const Matrix& a, const Matrix& b,
                            const Matrix& c, const RowVector& k);

}  // namespace qip
