#include "qip/linearization.hpp"

#include <cmath>
#include <numbers>

#include "qip/errors.hpp"

namespace qip {

OperatingPoint find_equilibrium(const PlantParams& p, Equilibrium which) {
  p.validate();
  OperatingPoint op{State::zero(p.dof()), 0.0};
  if (which == Equilibrium::kHanging) op.state.q(1) = std::numbers::pi;
  return op;
}

VectorField plant_vector_field(const PlantParams& p) {
  return [p](const Vector& flat, double u) {
    const StateDerivative d = forward_dynamics(from_interleaved(flat), u, p);
    return to_interleaved(State{d.qdot, d.qddot});
  };
}

Jacobians central_difference_jacobians(const VectorField& f, const Vector& x0,
                                       double u0, double rel_step) {
  const Eigen::Index n = x0.size();
  const Vector f0 = f(x0, u0);
  Jacobians jac{Matrix(f0.size(), n), Matrix(f0.size(), 1)};

  auto check = [](const Vector& column, const char* what, Eigen::Index idx) {
    if (!column.allFinite()) {
      throw NonFiniteDerivative(std::string("linearize: non-finite derivative w.r.t. ") +
                                what + "[" + std::to_string(idx) + "]");
    }
  };

  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = std::max(rel_step, rel_step * std::abs(x0(j)));
    Vector plus = x0;
    Vector minus = x0;
    plus(j) += h;
    minus(j) -= h;
    jac.a.col(j) = (f(plus, u0) - f(minus, u0)) / (plus(j) - minus(j));
    check(jac.a.col(j), "x", j);
  }
  const double h = std::max(rel_step, rel_step * std::abs(u0));
  jac.b.col(0) = (f(x0, u0 + h) - f(x0, u0 - h)) / (2.0 * h);
  check(jac.b.col(0), "u", 0);
  return jac;
}

StateSpace linearize(const PlantParams& p, const OperatingPoint& op,
                     double rel_step) {
  p.validate();
  const Jacobians jac = central_difference_jacobians(
      plant_vector_field(p), to_interleaved(op.state), op.force, rel_step);

  StateSpace ss;
  ss.a = jac.a;
  ss.b = jac.b;
  ss.c = Matrix::Zero(1, p.state_dim());
  ss.c(0, 0) = 1.0;
  ss.d = Matrix::Zero(1, 1);
  ss.operating_point = op;
  return ss;
}

CartMassFit calibrate_cart_mass(const PlantParams& p, double target,
                                double initial_guess) {
  if (!(target > 0.0)) throw InvalidArgument("calibrate_cart_mass: target must be positive");

  auto gain_at = [&](double mass) {
    PlantParams trial = p;
    trial.cart_mass = mass;
    return linearize(trial, find_equilibrium(trial, Equilibrium::kUpright)).b(1, 0);
  };
  // B(2) is proportional to 1/(M + const), so iterate on the reciprocal,
  // which is affine in the mass and makes the secant step exact up to
  // difference noise.
  auto residual = [&](double mass) { return 1.0 / gain_at(mass) - 1.0 / target; };

  CartMassFit fit;
  double m0 = initial_guess;
  double m1 = 0.5 * initial_guess;
  double r0 = residual(m0);
  double r1 = residual(m1);
  for (fit.iterations = 1; fit.iterations <= 50; ++fit.iterations) {
    if (r1 == r0) break;
    double m2 = m1 - r1 * (m1 - m0) / (r1 - r0);
    if (!(m2 > 0.0)) m2 = 0.5 * m1;
    m0 = m1;
    r0 = r1;
    m1 = m2;
    r1 = residual(m1);
    if (std::abs(m1 - m0) <= 1e-14 * std::max(1.0, std::abs(m1))) break;
  }
  if (!std::isfinite(m1) || !(m1 > 0.0)) {
    throw NoConvergence("calibrate_cart_mass: secant iteration failed");
  }
  fit.cart_mass = m1;
  fit.achieved = gain_at(m1);
  return fit;
}

}  // namespace qip
