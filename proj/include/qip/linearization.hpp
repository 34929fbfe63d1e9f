#pragma once

#include <functional>

#include "qip/dynamics.hpp"

namespace qip {

enum class Equilibrium { kUpright, kHanging };

struct OperatingPoint {
  State state;
  double force = 0.0;
};

/// Linear model about an operating point. All matrices use the interleaved
/// state layout [x, ẋ, θ₁, θ̇₁, ...]; the single output is cart position.
struct StateSpace {
  Matrix a;
  Matrix b;
  Matrix c;
  Matrix d;
  OperatingPoint operating_point;

  int state_dim() const { return static_cast<int>(a.rows()); }
};

/// Upright: everything zero. Hanging: θ₁ = π, the rest zero.
OperatingPoint find_equilibrium(const PlantParams& p, Equilibrium which);

/// Flat-state vector field ẋ = f(x, u) in interleaved order.
using VectorField = std::function<Vector(const Vector& x, double u)>;

/// ẋ = f(x, F) for the plant, in interleaved order.
VectorField plant_vector_field(const PlantParams& p);

struct Jacobians {
  Matrix a;  // ∂f/∂x
  Matrix b;  // ∂f/∂u
};

/// Central differences with per-coordinate step max(rel_step, rel_step·|xᵢ|).
/// Throws NonFiniteDerivative on any NaN/Inf quotient.
Jacobians central_difference_jacobians(const VectorField& f, const Vector& x0,
                                       double u0, double rel_step = 1e-6);

/// Linearizes the nonlinear plant about `op` (normally an equilibrium).
StateSpace linearize(const PlantParams& p, const OperatingPoint& op,
                     double rel_step = 1e-6);

struct CartMassFit {
  double cart_mass = 0.0;
  double achieved = 0.0;  // ∂ẍ/∂F at the fitted mass
  int iterations = 0;
};

/// Secant iteration on the cart mass so that the upright linearization's
/// cart-acceleration input gain B(2) equals `target`. Every other parameter
/// is taken from `p`.
CartMassFit calibrate_cart_mass(const PlantParams& p, double target,
                                double initial_guess = 1.0);

}  // namespace qip
