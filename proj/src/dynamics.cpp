#include "qip/dynamics.hpp"

#include <cmath>
#include <string>

#include "qip/errors.hpp"

namespace qip {
namespace {

// Planar kinematics of the chain at one configuration. For link i the
// center of mass sits at
//   x_i = x − Σ_{j≤i} L_ij sin φ_j,   y_i = Σ_{j≤i} L_ij cos φ_j
// with absolute angles φ_j = θ₁ + … + θ_j and lever L_ij = l_j (j < i) or
// l_i/2 (j = i).
struct ChainGeometry {
  std::vector<double> sin_phi;
  std::vector<double> cos_phi;
};

ChainGeometry geometry(const Vector& q, int links) {
  ChainGeometry g;
  g.sin_phi.resize(links);
  g.cos_phi.resize(links);
  double phi = 0.0;
  for (int j = 0; j < links; ++j) {
    phi += q(j + 1);
    g.sin_phi[j] = std::sin(phi);
    g.cos_phi[j] = std::cos(phi);
  }
  return g;
}

double lever(const PlantParams& p, int link, int j) {
  return j < link ? p.lengths[j] : 0.5 * p.lengths[link];
}

// Translational Jacobian of link i's center of mass, 2 × (n+1).
Eigen::Matrix<double, 2, Eigen::Dynamic> com_jacobian(const PlantParams& p,
                                                      const ChainGeometry& g,
                                                      int link) {
  Eigen::Matrix<double, 2, Eigen::Dynamic> jac =
      Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, p.dof());
  jac(0, 0) = 1.0;
  for (int j = 0; j <= link; ++j) {
    const double l = lever(p, link, j);
    // φ_j depends on θ₁..θ_j with unit weight.
    for (int k = 0; k <= j; ++k) {
      jac(0, k + 1) -= l * g.cos_phi[j];
      jac(1, k + 1) -= l * g.sin_phi[j];
    }
  }
  return jac;
}

double rod_inertia(const PlantParams& p, int link) {
  return p.masses[link] * p.lengths[link] * p.lengths[link] / 12.0;
}

void check_dims(const Vector& v, const PlantParams& p, const char* what) {
  if (v.size() != p.dof()) {
    throw InvalidArgument(std::string(what) + ": expected length " +
                          std::to_string(p.dof()));
  }
}

}  // namespace

Matrix PlantParams::damping_matrix() const {
  if (damping.size() == 0) return Matrix::Zero(dof(), dof());
  return damping;
}

void PlantParams::validate() const {
  if (links < 1) throw InvalidArgument("plant.n: at least one link required");
  if (!(cart_mass > 0.0) || !std::isfinite(cart_mass)) {
    throw InvalidArgument("plant.cart_mass: must be positive");
  }
  if (static_cast<int>(masses.size()) != links) {
    throw InvalidArgument("plant.masses: expected " + std::to_string(links) + " entries");
  }
  if (static_cast<int>(lengths.size()) != links) {
    throw InvalidArgument("plant.lengths: expected " + std::to_string(links) + " entries");
  }
  for (int i = 0; i < links; ++i) {
    if (!(masses[i] > 0.0) || !std::isfinite(masses[i])) {
      throw InvalidArgument("plant.masses[" + std::to_string(i) + "]: must be positive");
    }
    if (!(lengths[i] > 0.0) || !std::isfinite(lengths[i])) {
      throw InvalidArgument("plant.lengths[" + std::to_string(i) + "]: must be positive");
    }
  }
  if (!(gravity > 0.0) || !std::isfinite(gravity)) {
    throw InvalidArgument("plant.gravity: must be positive");
  }
  if (damping.size() != 0) {
    if (damping.rows() != dof() || damping.cols() != dof()) {
      throw InvalidArgument("plant.damping: expected a " + std::to_string(dof()) +
                            "x" + std::to_string(dof()) + " matrix");
    }
    require_finite(damping, "plant.damping");
    const Matrix sym = 0.5 * (damping + damping.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12) {
      throw InvalidArgument("plant.damping: must be positive semidefinite");
    }
  }
}

PlantParams quadruple_pendulum_params(double cart_mass) {
  PlantParams p;
  p.links = 4;
  p.cart_mass = cart_mass;
  p.masses = {0.1, 0.1, 0.1, 0.1};
  p.lengths = {0.03, 0.04, 0.07, 0.10};
  p.gravity = 9.81;
  return p;
}

State State::zero(int dof) { return {Vector::Zero(dof), Vector::Zero(dof)}; }

Matrix mass_matrix(const Vector& q, const PlantParams& p) {
  check_dims(q, p, "mass_matrix q");
  const ChainGeometry g = geometry(q, p.links);
  Matrix m = Matrix::Zero(p.dof(), p.dof());
  m(0, 0) = p.cart_mass;
  for (int i = 0; i < p.links; ++i) {
    const auto jac = com_jacobian(p, g, i);
    m.noalias() += p.masses[i] * jac.transpose() * jac;
    // Link i rotates at θ̇₁ + … + θ̇ᵢ.
    m.block(1, 1, i + 1, i + 1).array() += rod_inertia(p, i);
  }
  return m;
}

Vector velocity_product_terms(const Vector& q, const Vector& qdot,
                              const PlantParams& p) {
  check_dims(q, p, "velocity_product_terms q");
  check_dims(qdot, p, "velocity_product_terms qdot");
  const ChainGeometry g = geometry(q, p.links);
  std::vector<double> phidot_sq(p.links);
  double phidot = 0.0;
  for (int j = 0; j < p.links; ++j) {
    phidot += qdot(j + 1);
    phidot_sq[j] = phidot * phidot;
  }
  // M(q) = Σ mᵢ JᵢᵀJᵢ + const, so C·q̇ = Σ mᵢ Jᵢᵀ (J̇ᵢ q̇), where J̇ᵢq̇ is the
  // centripetal part of the center-of-mass acceleration.
  Vector h = Vector::Zero(p.dof());
  for (int i = 0; i < p.links; ++i) {
    Eigen::Vector2d accel = Eigen::Vector2d::Zero();
    for (int j = 0; j <= i; ++j) {
      const double l = lever(p, i, j);
      accel(0) += l * g.sin_phi[j] * phidot_sq[j];
      accel(1) -= l * g.cos_phi[j] * phidot_sq[j];
    }
    h.noalias() += p.masses[i] * com_jacobian(p, g, i).transpose() * accel;
  }
  return h;
}

Vector gravity_terms(const Vector& q, const PlantParams& p) {
  check_dims(q, p, "gravity_terms q");
  const ChainGeometry g = geometry(q, p.links);
  Vector grad = Vector::Zero(p.dof());
  for (int i = 0; i < p.links; ++i) {
    grad += p.masses[i] * p.gravity * com_jacobian(p, g, i).row(1).transpose();
  }
  return grad;
}

StateDerivative forward_dynamics(const State& x, double force,
                                 const PlantParams& p,
                                 const Vector& joint_torques) {
  check_dims(x.q, p, "forward_dynamics q");
  check_dims(x.qdot, p, "forward_dynamics qdot");
  if (!std::isfinite(force)) throw InvalidArgument("forward_dynamics: non-finite force");

  Vector generalized = Vector::Zero(p.dof());
  generalized(0) = force;
  if (joint_torques.size() != 0) {
    if (joint_torques.size() != p.links) {
      throw InvalidArgument("forward_dynamics: expected one torque per link");
    }
    generalized.tail(p.links) += joint_torques;
  }
  Vector rhs = generalized - velocity_product_terms(x.q, x.qdot, p) -
               gravity_terms(x.q, p);
  if (p.damping.size() != 0) rhs -= p.damping * x.qdot;

  StateDerivative d;
  d.qdot = x.qdot;
  try {
    d.qddot = lu_solve(mass_matrix(x.q, p), rhs);
  } catch (const SingularMatrix& e) {
    throw SingularMassMatrix(std::string("forward_dynamics: ") + e.what());
  }
  return d;
}

Energy total_energy(const State& x, const PlantParams& p) {
  check_dims(x.q, p, "total_energy q");
  check_dims(x.qdot, p, "total_energy qdot");
  const ChainGeometry g = geometry(x.q, p.links);
  Energy e;
  e.kinetic = 0.5 * p.cart_mass * x.qdot(0) * x.qdot(0);
  double omega = 0.0;
  for (int i = 0; i < p.links; ++i) {
    omega += x.qdot(i + 1);
    const Eigen::Vector2d v = com_jacobian(p, g, i) * x.qdot;
    e.kinetic += 0.5 * p.masses[i] * v.squaredNorm() +
                 0.5 * rod_inertia(p, i) * omega * omega;
    double height = 0.0;
    for (int j = 0; j <= i; ++j) height += lever(p, i, j) * g.cos_phi[j];
    e.potential += p.masses[i] * p.gravity * height;
  }
  return e;
}

Vector to_interleaved(const State& x) {
  const Eigen::Index dof = x.q.size();
  if (x.qdot.size() != dof) throw InvalidArgument("to_interleaved: q/qdot length mismatch");
  Vector flat(2 * dof);
  for (Eigen::Index i = 0; i < dof; ++i) {
    flat(2 * i) = x.q(i);
    flat(2 * i + 1) = x.qdot(i);
  }
  return flat;
}

State from_interleaved(const Vector& flat) {
  if (flat.size() % 2 != 0 || flat.size() < 4) {
    throw InvalidArgument("from_interleaved: length must be 2(n+1) with n >= 1");
  }
  const Eigen::Index dof = flat.size() / 2;
  State x{Vector(dof), Vector(dof)};
  for (Eigen::Index i = 0; i < dof; ++i) {
    x.q(i) = flat(2 * i);
    x.qdot(i) = flat(2 * i + 1);
  }
  return x;
}

}  // namespace qip
