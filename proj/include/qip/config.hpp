#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qip/dynamics.hpp"
#include "qip/simulation.hpp"
#include "qip/synthesis.hpp"

namespace qip {

/// Everything a pipeline run needs, resolved from a sectioned key = value
/// file:
///
///   [plant]           n, cart_mass, masses = [..], lengths = [..], gravity,
///                     damping = zero | <csv file relative to the config>
///   [lqr]             q_diag = [..], r
///   [pole_placement]  po, ts, spread, far_pole_spacing
///   [simulation]      dt, duration, rho, step_time, seed, initial_state = [..],
///                     force_noise, torque_noise, noise_parameter = variance | stddev,
///                     angle_limit = <rad> | none
///   [sweep]           ts = [..], dt
///
/// Lines starting with '#' or ';' are comments.
struct RunConfig {
  PlantParams plant;
  std::optional<LqrWeights> lqr;  // unset: LqrWeights::position_heavy
  PoleDesign pole_design;
  SimConfig simulation;
  std::vector<double> sweep_settling_times{3, 4, 5, 6, 7, 8, 9};
  std::optional<double> sweep_dt;

  LqrWeights lqr_weights() const;
  /// Simulation settings with the sweep's dt override applied.
  SimConfig sweep_simulation() const;
};

/// Throws ConfigError with "line N: ..." diagnostics.
RunConfig parse_config(std::string_view text,
                       const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text form that parse_config reads back to the same values. A
/// non-zero damping matrix is referenced as `damping_file`, which the caller
/// must write next to the config.
std::string format_config(const RunConfig& cfg,
                          const std::string& damping_file = "damping.csv");

}  // namespace qip
