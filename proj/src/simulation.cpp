#include "qip/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <random>

#include "qip/errors.hpp"
#include "qip/linearization.hpp"

namespace qip {

std::size_t SimConfig::samples() const {
  // Guard against duration/dt landing a hair below an integer.
  return static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
}

void SimConfig::validate(int state_dim) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("simulation.dt: must be positive");
  if (!(duration >= dt) || !std::isfinite(duration)) {
    throw InvalidArgument("simulation.duration: must be at least dt");
  }
  if (!std::isfinite(reference)) throw InvalidArgument("simulation.rho: must be finite");
  if (!(force_stddev >= 0.0) || !(torque_stddev >= 0.0)) {
    throw InvalidArgument("simulation: disturbance spread must be non-negative");
  }
  if (initial_state.size() != 0) {
    if (initial_state.size() != state_dim) {
      throw InvalidArgument("simulation.initial_state: expected " + std::to_string(state_dim) +
                            " entries");
    }
    require_finite(initial_state, "simulation.initial_state");
  }
  if (!(angle_limit > 0.0)) throw InvalidArgument("simulation.angle_limit: must be positive");
}

std::string to_string(Outcome o) {
  return o == Outcome::kCompleted ? "completed" : "diverged";
}

namespace {

bool out_of_range(const Vector& x, const SimConfig& cfg) {
  if (!x.allFinite()) return true;
  if (x.cwiseAbs().maxCoeff() > cfg.state_limit) return true;
  for (Eigen::Index i = 2; i < x.size(); i += 2) {
    if (std::abs(x(i)) > cfg.angle_limit) return true;
  }
  return false;
}

}  // namespace

SimTrace simulate(const PlantParams& p, const Gains& gains, const SimConfig& cfg) {
  p.validate();
  const int dim = p.state_dim();
  cfg.validate(dim);
  if (gains.k.size() != dim) {
    throw InvalidArgument("simulate: gain length " + std::to_string(gains.k.size()) +
                          " does not match state dimension " + std::to_string(dim));
  }

  // Separate streams so enabling one disturbance does not shift the other.
  const auto seed_lo = static_cast<std::uint32_t>(cfg.seed);
  const auto seed_hi = static_cast<std::uint32_t>(cfg.seed >> 32);
  std::seed_seq force_seed{seed_lo, seed_hi, 1u};
  std::seed_seq torque_seed{seed_lo, seed_hi, 2u};
  std::mt19937_64 force_rng(force_seed);
  std::mt19937_64 torque_rng(torque_seed);
  // One distribution per stream: normal_distribution caches a spare variate.
  std::normal_distribution<double> force_normal(0.0, 1.0);
  std::normal_distribution<double> torque_normal(0.0, 1.0);

  const std::size_t samples = cfg.samples();
  SimTrace trace;
  trace.time.reserve(samples);
  trace.state.reserve(samples);
  trace.input.reserve(samples);
  trace.reference.reserve(samples);
  trace.force_disturbance.reserve(samples);
  trace.torque_disturbance.reserve(samples);

  Vector x = cfg.initial_state.size() != 0 ? cfg.initial_state : Vector::Zero(dim);
  const double h = cfg.dt;

  for (std::size_t step = 0; step < samples; ++step) {
    const double t = static_cast<double>(step) * h;
    const double r = t >= cfg.step_time ? cfg.reference : 0.0;
    const double u = gains.n * r - gains.k.dot(x);
    const double fd = cfg.force_stddev > 0.0 ? cfg.force_stddev * force_normal(force_rng) : 0.0;
    Vector tau = Vector::Zero(p.links);
    if (cfg.torque_stddev > 0.0) {
      for (int i = 0; i < p.links; ++i) tau(i) = cfg.torque_stddev * torque_normal(torque_rng);
    }

    trace.time.push_back(t);
    trace.state.push_back(x);
    trace.input.push_back(u);
    trace.reference.push_back(r);
    trace.force_disturbance.push_back(fd);
    trace.torque_disturbance.push_back(tau);

    if (out_of_range(x, cfg)) {
      trace.outcome = Outcome::kDiverged;
      break;
    }
    if (step + 1 == samples) break;

    const double force = u + fd;
    auto deriv = [&](const Vector& s) {
      const StateDerivative d = forward_dynamics(from_interleaved(s), force, p, tau);
      return to_interleaved(State{d.qdot, d.qddot});
    };
    Vector next;
    try {
      const Vector k1 = deriv(x);
      const Vector k2 = deriv(x + 0.5 * h * k1);
      const Vector k3 = deriv(x + 0.5 * h * k2);
      const Vector k4 = deriv(x + h * k3);
      next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } catch (const InvalidArgument&) {
      // A non-finite intermediate stage: the run has left the model.
      trace.outcome = Outcome::kDiverged;
      break;
    }
    if (!next.allFinite()) {
      trace.outcome = Outcome::kDiverged;
      break;
    }
    x = std::move(next);
  }
  return trace;
}

ResponseMetrics metrics(const SimTrace& trace, double reference, double step_time) {
  if (reference == 0.0) throw ZeroReference("metrics: step amplitude must be nonzero");
  ResponseMetrics m;
  if (trace.size() == 0) return m;

  const int links = static_cast<int>(trace.state.front().size() / 2) - 1;
  m.peak_angles.assign(links, 0.0);
  for (const auto& x : trace.state) {
    for (int i = 0; i < links; ++i) {
      m.peak_angles[i] = std::max(m.peak_angles[i], std::abs(x(2 * (i + 1))));
    }
  }
  if (trace.outcome == Outcome::kDiverged) return m;

  const std::size_t n = trace.size();
  double peak = -std::numeric_limits<double>::infinity();
  std::optional<std::size_t> last_outside;
  for (std::size_t k = 0; k < n; ++k) {
    const double y = trace.state[k](0);
    peak = std::max(peak, y / reference);
    if (std::abs(y - reference) > 0.02 * std::abs(reference)) last_outside = k;
  }
  m.overshoot = std::max(0.0, 100.0 * (peak - 1.0));
  if (!last_outside) {
    m.settling_time = 0.0;
  } else if (*last_outside + 1 < n) {
    m.settling_time = std::max(0.0, trace.time[*last_outside + 1] - step_time);
  }

  const std::size_t tail = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.05 * n)));
  double sum = 0.0;
  for (std::size_t k = n - tail; k < n; ++k) sum += trace.state[k](0);
  m.steady_state_error = std::abs(reference - sum / static_cast<double>(tail));

  const double half_pi = std::numbers::pi / 2.0;
  const bool upright = std::all_of(m.peak_angles.begin(), m.peak_angles.end(),
                                   [&](double a) { return a < half_pi; });
  m.stabilized = m.settling_time.has_value() && upright &&
                 *m.steady_state_error < 0.02 * std::abs(reference);
  return m;
}

std::vector<SweepRow> sweep_settling_times(const PlantParams& p,
                                           const PoleDesign& base,
                                           const std::vector<double>& settling_times,
                                           const SimConfig& cfg) {
  p.validate();
  cfg.validate(p.state_dim());
  const StateSpace ss = linearize(p, find_equilibrium(p, Equilibrium::kUpright));

  auto run_row = [&](double ts) {
    SweepRow row;
    row.settling_time = ts;
    try {
      PoleDesign design = base;
      design.settling_time = ts;
      const Gains gains = place_poles(ss.a, ss.b, ss.c, second_order_poles(design, ss.state_dim()));
      const SimTrace trace = simulate(p, gains, cfg);
      row.gains = gains;
      row.outcome = trace.outcome;
      row.response = metrics(trace, cfg.reference, cfg.step_time);
      row.stabilized = row.response->stabilized;
      if (!row.stabilized) {
        row.reason = trace.outcome == Outcome::kDiverged ? "diverged" : "criterion not met";
      }
    } catch (const Error& e) {
      row.stabilized = false;
      row.reason = e.what();
    }
    return row;
  };

  std::vector<std::future<SweepRow>> pending;
  pending.reserve(settling_times.size());
  for (double ts : settling_times) pending.push_back(std::async(std::launch::async, run_row, ts));
  std::vector<SweepRow> rows;
  rows.reserve(pending.size());
  for (auto& f : pending) rows.push_back(f.get());
  return rows;
}

std::string trace_to_csv(const SimTrace& trace) {
  std::string out = "t";
  const int dim = trace.size() ? static_cast<int>(trace.state.front().size()) : 0;
  const int links = dim / 2 - 1;
  out += ",x,xdot";
  for (int i = 1; i <= links; ++i) {
    out += ",th" + std::to_string(i) + ",th" + std::to_string(i) + "dot";
  }
  out += ",u,r,Fd";
  for (int i = 1; i <= links; ++i) out += ",tau" + std::to_string(i);
  out += '\n';

  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out += buf;
  };
  for (std::size_t k = 0; k < trace.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", trace.time[k]);
    out += buf;
    for (Eigen::Index i = 0; i < trace.state[k].size(); ++i) put(trace.state[k](i));
    put(trace.input[k]);
    put(trace.reference[k]);
    put(trace.force_disturbance[k]);
    for (Eigen::Index i = 0; i < trace.torque_disturbance[k].size(); ++i) {
      put(trace.torque_disturbance[k](i));
    }
    out += '\n';
  }
  return out;
}

}  // namespace qip
