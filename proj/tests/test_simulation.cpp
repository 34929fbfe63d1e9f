#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "qip/errors.hpp"
#include "qip/linearization.hpp"
#include "qip/simulation.hpp"
#include "qip/synthesis.hpp"
#include "support.hpp"

using namespace qip;

namespace {

Gains zero_gains(int dim) {
  Gains g;
  g.k = RowVector::Zero(dim);
  g.n = 0.0;
  return g;
}

Gains rod_lqr(const PlantParams& p) {
  const StateSpace ss = linearize(p, find_equilibrium(p, Equilibrium::kUpright));
  return lqr_gain(ss.a, ss.b, ss.c, LqrWeights::position_heavy(ss.state_dim()));
}

// Hand-built trace of a 1-link plant whose cart follows y(t).
SimTrace synthetic_trace(const std::function<double(double)>& y, double dt, double duration) {
  SimTrace t;
  const auto n = static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double time = static_cast<double>(k) * dt;
    Vector x = Vector::Zero(4);
    x(0) = y(time);
    t.time.push_back(time);
    t.state.push_back(x);
    t.input.push_back(0.0);
    t.reference.push_back(1.0);
    t.force_disturbance.push_back(0.0);
    t.torque_disturbance.push_back(Vector::Zero(1));
  }
  return t;
}

SimConfig free_swing(const PlantParams& p, double dt, double duration, std::mt19937_64& rng,
                     double amplitude = 0.3) {
  SimConfig cfg;
  cfg.dt = dt;
  cfg.duration = duration;
  cfg.reference = 0.0;
  cfg.angle_limit = std::numeric_limits<double>::infinity();
  State x0 = find_equilibrium(p, Equilibrium::kHanging).state;
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  for (Eigen::Index i = 1; i < x0.q.size(); ++i) x0.q(i) += u(rng);
  cfg.initial_state = to_interleaved(x0);
  return cfg;
}

}  // namespace

TEST(Simulate, EquilibriumIsInvariant) {
  const PlantParams p = quadruple_pendulum_params();
  SimConfig cfg;
  cfg.reference = 0.0;
  cfg.duration = 2.0;
  const SimTrace t = simulate(p, rod_lqr(p), cfg);
  ASSERT_EQ(t.outcome, Outcome::kCompleted);
  ASSERT_EQ(t.size(), 2001u);
  for (const auto& x : t.state) EXPECT_TRUE(x.isZero(0.0));
}

TEST(Simulate, SampleCountAndTimeGrid) {
  SimConfig cfg;
  cfg.dt = 0.1;
  cfg.duration = 1.0;
  EXPECT_EQ(cfg.samples(), 11u);
  cfg.dt = 1e-3;
  cfg.duration = 20.0;
  EXPECT_EQ(cfg.samples(), 20001u);
}

TEST(Simulate, PropertyFreeSwingConservesEnergy) {
  std::mt19937_64 rng(51);
  const PlantParams p = quadruple_pendulum_params();
  for (int trial = 0; trial < 5; ++trial) {
    const SimConfig cfg = free_swing(p, 1e-3, 2.0, rng);
    const SimTrace t = simulate(p, zero_gains(p.state_dim()), cfg);
    ASSERT_EQ(t.outcome, Outcome::kCompleted);
    const double e0 = total_energy(from_interleaved(cfg.initial_state), p).total();
    double drift = 0.0;
    for (const auto& x : t.state) {
      const State s = from_interleaved(x);
      const double e = oracle::oracle_kinetic(s.q, s.qdot, p) + oracle::oracle_potential(s.q, p);
      drift = std::max(drift, std::abs(e - e0));
    }
    EXPECT_LT(drift / std::abs(e0), 1e-5);
  }
}

TEST(Simulate, HalvingTheStepBarelyMovesTheNominalFinalState) {
  const PlantParams p = quadruple_pendulum_params();
  const Gains g = rod_lqr(p);
  SimConfig coarse;
  SimConfig fine;
  fine.dt = coarse.dt / 2;
  const SimTrace a = simulate(p, g, coarse);
  const SimTrace b = simulate(p, g, fine);
  ASSERT_EQ(a.outcome, Outcome::kCompleted);
  ASSERT_EQ(b.outcome, Outcome::kCompleted);
  EXPECT_LT((a.state.back() - b.state.back()).norm() / a.state.back().norm(), 1e-6);
}

TEST(Simulate, FreeSwingErrorShrinksAtFourthOrder) {
  std::mt19937_64 rng(52);
  const PlantParams p = quadruple_pendulum_params();
  // Small swings keep the motion regular, so the asymptotic ratio 16 shows.
  const SimConfig base = free_swing(p, 1e-3, 1.0, rng, 0.05);
  std::vector<Vector> finals;
  for (double dt : {1e-3, 5e-4, 2.5e-4}) {
    SimConfig cfg = base;
    cfg.dt = dt;
    finals.push_back(simulate(p, zero_gains(p.state_dim()), cfg).state.back());
  }
  const double e1 = (finals[0] - finals[1]).norm();
  const double e2 = (finals[1] - finals[2]).norm();
  EXPECT_GT(e1 / e2, 8.0);
  EXPECT_LT(e1 / e2, 32.0);
}

TEST(Simulate, SingleRodMatchesClosedFormIntegration) {
  // Same RK4 on the hand-derived cart-pole equations.
  const double cart = 1.0, m = 0.1, l = 0.1, g = 9.81;
  const PlantParams p = oracle::rod_cart_pole(cart, m, l, g);
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.duration = 0.5;
  cfg.reference = 0.0;
  cfg.initial_state = (Vector(4) << 0.0, 0.0, 0.2, 0.0).finished();
  Gains gains = zero_gains(4);
  gains.k(0) = -0.5;  // u = 0.5·x keeps the force nonzero once the cart moves
  const SimTrace t = simulate(p, gains, cfg);
  auto f = [&](const Eigen::Vector4d& s, double force) {
    const auto acc = oracle::rod_cart_pole_accel(s(2), s(3), force, cart, m, l, g);
    return Eigen::Vector4d(s(1), acc(0), s(3), acc(1));
  };
  Eigen::Vector4d s(0.0, 0.0, 0.2, 0.0);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double u = 0.5 * s(0);
    const double h = cfg.dt;
    const auto k1 = f(s, u), k2 = f(s + 0.5 * h * k1, u), k3 = f(s + 0.5 * h * k2, u), k4 = f(s + h * k3, u);
    s += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    ASSERT_LE((t.state[k + 1] - Vector(s)).cwiseAbs().maxCoeff(), 1e-11) << "step " << k;
  }
}

TEST(Simulate, OpenLoopUprightDiverges) {
  const PlantParams p = quadruple_pendulum_params();
  SimConfig cfg;
  cfg.duration = 10.0;
  cfg.initial_state = Vector::Zero(10);
  cfg.initial_state(2) = 1e-3;
  const SimTrace t = simulate(p, zero_gains(10), cfg);
  EXPECT_EQ(t.outcome, Outcome::kDiverged);
  EXPECT_LT(t.size(), cfg.samples());
  EXPECT_TRUE(t.state.back().allFinite());
  const ResponseMetrics m = metrics(t, 1.0);
  EXPECT_FALSE(m.stabilized);
  EXPECT_FALSE(m.settling_time);
}

TEST(Simulate, SeededDisturbancesAreReproducible) {
  const PlantParams p = quadruple_pendulum_params();
  const Gains g = rod_lqr(p);
  SimConfig cfg;
  cfg.duration = 2.0;
  cfg.force_stddev = 0.1;
  cfg.torque_stddev = std::sqrt(1e-9);
  cfg.seed = 0x123456789abcdefULL;
  const std::string a = trace_to_csv(simulate(p, g, cfg));
  EXPECT_EQ(a, trace_to_csv(simulate(p, g, cfg)));
  SimConfig other = cfg;
  other.seed ^= std::uint64_t{1} << 40;  // differs only in the high half
  EXPECT_NE(a, trace_to_csv(simulate(p, g, other)));
}

TEST(Simulate, DisturbanceStreamsHaveRequestedSpread) {
  const PlantParams p = quadruple_pendulum_params();
  SimConfig cfg;
  cfg.duration = 20.0;
  cfg.force_stddev = 0.1;
  cfg.torque_stddev = std::sqrt(1e-9);
  cfg.seed = 9;
  const SimTrace t = simulate(p, rod_lqr(p), cfg);
  ASSERT_EQ(t.outcome, Outcome::kCompleted);
  const double n = static_cast<double>(t.size());
  const double mean = std::accumulate(t.force_disturbance.begin(), t.force_disturbance.end(), 0.0) / n;
  double var = 0.0, tvar = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    var += (t.force_disturbance[k] - mean) * (t.force_disturbance[k] - mean);
    tvar += t.torque_disturbance[k].squaredNorm();
  }
  EXPECT_NEAR(mean, 0.0, 5.0 * 0.1 / std::sqrt(n));
  EXPECT_NEAR(std::sqrt(var / n), 0.1, 0.003);
  EXPECT_NEAR(std::sqrt(tvar / (4.0 * n)) / std::sqrt(1e-9), 1.0, 0.03);

  // Switching the torque stream off leaves the force samples untouched.
  SimConfig force_only = cfg;
  force_only.torque_stddev = 0.0;
  const SimTrace f = simulate(p, rod_lqr(p), force_only);
  EXPECT_EQ(f.force_disturbance, t.force_disturbance);
}

TEST(Simulate, StepTimeDelaysReference) {
  const PlantParams p = quadruple_pendulum_params();
  SimConfig cfg;
  cfg.duration = 1.0;
  cfg.step_time = 0.5;
  const SimTrace t = simulate(p, rod_lqr(p), cfg);
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_EQ(t.reference[k], t.time[k] >= 0.5 ? 1.0 : 0.0);
    if (t.time[k] < 0.5) EXPECT_TRUE(t.state[k].isZero(0.0));
  }
}

TEST(Simulate, RejectsBadConfig) {
  const PlantParams p = quadruple_pendulum_params();
  SimConfig cfg;
  cfg.dt = 0.0;
  EXPECT_THROW(simulate(p, zero_gains(10), cfg), InvalidArgument);
  cfg = SimConfig{};
  cfg.initial_state = Vector::Zero(3);
  EXPECT_THROW(simulate(p, zero_gains(10), cfg), InvalidArgument);
  EXPECT_THROW(simulate(p, zero_gains(4), SimConfig{}), InvalidArgument);
}

TEST(Metrics, ConstantTraceAtReference) {
  const ResponseMetrics m = metrics(synthetic_trace([](double) { return 1.0; }, 1e-3, 5.0), 1.0);
  EXPECT_DOUBLE_EQ(*m.overshoot, 0.0);
  EXPECT_DOUBLE_EQ(*m.settling_time, 0.0);
  EXPECT_DOUBLE_EQ(*m.steady_state_error, 0.0);
  EXPECT_TRUE(m.stabilized);
}

TEST(Metrics, FirstOrderResponseSettlingTime) {
  const double dt = 1e-3;
  const ResponseMetrics m =
      metrics(synthetic_trace([](double t) { return 1.0 - std::exp(-t); }, dt, 20.0), 1.0);
  EXPECT_NEAR(*m.settling_time, -std::log(0.02), dt);
  EXPECT_DOUBLE_EQ(*m.overshoot, 0.0);
  EXPECT_LT(*m.steady_state_error, 1e-8);
  EXPECT_TRUE(m.stabilized);
}

TEST(Metrics, OvershootAndNegativeReference) {
  // Underdamped response to a negative step.
  auto y = [](double t) { return -2.0 * (1.0 - std::exp(-t) * std::cos(5 * t)); };
  const ResponseMetrics m = metrics(synthetic_trace(y, 1e-3, 20.0), -2.0);
  EXPECT_GT(*m.overshoot, 10.0);
  EXPECT_TRUE(m.stabilized);
}

TEST(Metrics, NeverSettlingTraceIsNotStabilized) {
  const ResponseMetrics m =
      metrics(synthetic_trace([](double t) { return 1.0 + 0.1 * std::sin(t); }, 1e-2, 20.0), 1.0);
  EXPECT_FALSE(m.settling_time);
  EXPECT_FALSE(m.stabilized);
}

TEST(Metrics, ZeroReferenceThrows) {
  EXPECT_THROW(metrics(synthetic_trace([](double) { return 0.0; }, 1e-2, 1.0), 0.0), ZeroReference);
}

TEST(Sweep, RowsKeepOrderAndIsolateFailures) {
  const PlantParams p = quadruple_pendulum_params();
  SimConfig cfg;
  cfg.duration = 1.0;
  const std::vector<double> ts{3, 4, 5, 6, 7, 8, 9, -1};
  const auto rows = sweep_settling_times(p, PoleDesign{}, ts, cfg);
  ASSERT_EQ(rows.size(), ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_EQ(rows[i].settling_time, ts[i]);
  EXPECT_FALSE(rows.back().stabilized);
  EXPECT_NE(rows.back().reason.find("pole_placement.ts"), std::string::npos);
  EXPECT_FALSE(rows.back().gains);
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) EXPECT_TRUE(rows[i].gains);
}

TEST(TraceCsv, HeaderAndPrecision) {
  SimTrace t = synthetic_trace([](double) { return 0.1; }, 0.5, 0.5);
  const std::string csv = trace_to_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x,xdot,th1,th1dot,u,r,Fd,tau1");
  EXPECT_NE(csv.find("0.10000000000000001"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}
