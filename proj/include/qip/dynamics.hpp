#pragma once

#include <vector>

#include "qip/linalg.hpp"

namespace qip {

/// Cart on a horizontal rail carrying a serial chain of `links` uniform rods.
/// Link i hangs from the tip of link i-1 (link 1 from the cart); its angle is
/// measured relative to link i-1, counterclockwise positive, with link 1
/// measured from the vertical.
struct PlantParams {
  int links = 1;
  double cart_mass = 1.0;             // kg
  std::vector<double> masses;         // kg, one per link
  std::vector<double> lengths;        // m, one per link
  double gravity = 9.81;              // m/s²
  Matrix damping;                     // (links+1)², acts on q̇; empty means zero

  int dof() const { return links + 1; }
  int state_dim() const { return 2 * (links + 1); }

  /// Damping as a full matrix (zeros when unset).
  Matrix damping_matrix() const;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
};

/// The four-link plant: 0.1 kg links of 0.03, 0.04, 0.07, 0.10 m under
/// g = 9.81. The default cart mass 0.1 kg is the value recovered by
/// calibrate_cart_mass() against the published B(2) = 7.76.
PlantParams quadruple_pendulum_params(double cart_mass = 0.1);

/// Generalized coordinates [x, θ₁..θₙ] and their rates.
struct State {
  Vector q;
  Vector qdot;

  static State zero(int dof);
};

struct StateDerivative {
  Vector qdot;
  Vector qddot;
};

struct Energy {
  double kinetic = 0.0;
  double potential = 0.0;
  double total() const { return kinetic + potential; }
};

/// M(q): Hessian of the kinetic energy with respect to q̇.
Matrix mass_matrix(const Vector& q, const PlantParams& p);

/// C(q, q̇)·q̇, the centripetal and Coriolis generalized forces.
Vector velocity_product_terms(const Vector& q, const Vector& qdot,
                              const PlantParams& p);

/// G(q) = ∇V(q).
Vector gravity_terms(const Vector& q, const PlantParams& p);

/// q̈ = M⁻¹(F_gen − C·q̇ − D·q̇ − G) with F_gen = [force, τ₁..τₙ].
/// `joint_torques` may be empty (no torques) or hold one entry per link.
StateDerivative forward_dynamics(const State& x, double force,
                                 const PlantParams& p,
                                 const Vector& joint_torques = Vector());

/// Kinetic and potential energy; potential is zero at rail height.
Energy total_energy(const State& x, const PlantParams& p);

/// Interleaved layout [x, ẋ, θ₁, θ̇₁, ..., θₙ, θ̇ₙ].
Vector to_interleaved(const State& x);
State from_interleaved(const Vector& flat);

}  // namespace qip
