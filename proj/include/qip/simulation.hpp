#pragma once

#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qip/dynamics.hpp"
#include "qip/synthesis.hpp"

namespace qip {

struct SimConfig {
  double dt = 1e-3;          // s, RK4 step and control/noise hold interval
  double duration = 20.0;    // s
  double reference = 1.0;    // m, step amplitude ρ
  double step_time = 0.0;    // s
  double force_stddev = 0.0;   // N, cart force disturbance
  double torque_stddev = 0.0;  // N·m, per-joint torque disturbance
  std::uint64_t seed = 0;
  Vector initial_state;      // interleaved layout; empty means all zero
  /// Any |θᵢ| beyond this ends the run as diverged. Infinity disables it,
  /// which is needed for runs around the hanging equilibrium.
  double angle_limit = std::numbers::pi;
  double state_limit = 1e6;

  /// Number of samples on the time grid, floor(duration/dt) + 1.
  std::size_t samples() const;
  void validate(int state_dim) const;
};

enum class Outcome { kCompleted, kDiverged };

std::string to_string(Outcome o);

/// Column-oriented record; every vector has the same length. Row k holds the
/// state at t_k and the input, reference and disturbances held over
/// [t_k, t_k + dt).
struct SimTrace {
  std::vector<double> time;
  std::vector<Vector> state;         // interleaved layout
  std::vector<double> input;         // controller output u = N·r − K·x
  std::vector<double> reference;
  std::vector<double> force_disturbance;
  std::vector<Vector> torque_disturbance;
  Outcome outcome = Outcome::kCompleted;

  std::size_t size() const { return time.size(); }
};

/// Closed-loop RK4 run of the nonlinear plant under u = N·r − K·x, held
/// constant over each step. Disturbances come from seeded Gaussian streams,
/// sampled once per step: the force is added to u and the torques act on
/// the joints. Identical inputs give bit-identical traces.
SimTrace simulate(const PlantParams& p, const Gains& gains, const SimConfig& cfg);

struct ResponseMetrics {
  std::optional<double> overshoot;           // %
  std::optional<double> settling_time;       // s after the step, 2% band
  std::optional<double> steady_state_error;  // m
  std::vector<double> peak_angles;           // max |θᵢ| per link, rad
  bool stabilized = false;
};

/// Step-response metrics of the cart position against amplitude `reference`.
/// Throws ZeroReference for a zero amplitude.
ResponseMetrics metrics(const SimTrace& trace, double reference, double step_time = 0.0);

struct SweepRow {
  double settling_time = 0.0;  // design target
  bool stabilized = false;
  std::string reason;          // empty on success
  std::optional<Gains> gains;
  std::optional<ResponseMetrics> response;
  std::optional<Outcome> outcome;
};

/// For each settling time: redesign poles, place, recompute N, simulate and
/// score. Rows are independent and run concurrently; a synthesis failure is
/// recorded in its row instead of aborting.
std::vector<SweepRow> sweep_settling_times(const PlantParams& p,
                                           const PoleDesign& base,
                                           const std::vector<double>& settling_times,
                                           const SimConfig& cfg);

/// CSV with header t,x,xdot,th1,th1dot,...,u,r,Fd,tau1,...; %.17g.
std::string trace_to_csv(const SimTrace& trace);

}  // namespace qip
