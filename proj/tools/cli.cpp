#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>

#include "qip/config.hpp"
#include "qip/errors.hpp"
#include "qip/io.hpp"
#include "qip/linearization.hpp"
#include "qip/reference.hpp"
#include "qip/simulation.hpp"
#include "qip/synthesis.hpp"

#ifndef QIP_FIXTURE_DIR
#define QIP_FIXTURE_DIR "fixtures/reference"
#endif

namespace qip::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

struct Overrides {
  std::optional<double> po;
  std::optional<double> ts;
  std::optional<double> dt;
  std::optional<double> duration;
  std::optional<double> rho;
  std::optional<std::uint64_t> seed;
};

void apply(const Overrides& o, RunConfig& cfg) {
  if (o.po) cfg.pole_design.percent_overshoot = *o.po;
  if (o.ts) cfg.pole_design.settling_time = *o.ts;
  if (o.dt) cfg.simulation.dt = *o.dt;
  if (o.duration) cfg.simulation.duration = *o.duration;
  if (o.rho) cfg.simulation.reference = *o.rho;
  if (o.seed) cfg.simulation.seed = *o.seed;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Creates the output directory and records the resolved config plus a
// manifest describing the run.
void prepare_output(const fs::path& dir, const RunConfig& cfg, const std::string& command,
                    const std::string& config_path) {
  fs::create_directories(dir);
  write_file_atomic(dir / "config.cfg", format_config(cfg));
  const Matrix damping = cfg.plant.damping_matrix();
  if (!damping.isZero(0.0)) write_file_atomic(dir / "damping.csv", to_csv(damping));
  Json manifest;
  manifest["command"] = command;
  manifest["config"] = config_path;
  manifest["output_directory"] = dir.string();
  manifest["seed"] = cfg.simulation.seed;
  manifest["tool_version"] = kVersion;
  manifest["timestamp"] = utc_timestamp();
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string fmt_double(double v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

StateSpace model_for(const RunConfig& cfg, const std::string& model_dir) {
  if (model_dir.empty()) {
    return linearize(cfg.plant, find_equilibrium(cfg.plant, Equilibrium::kUpright));
  }
  StateSpace ss;
  const fs::path dir(model_dir);
  ss.a = from_csv(read_file(dir / "A.csv"));
  ss.b = from_csv(read_file(dir / "B.csv"));
  ss.c = from_csv(read_file(dir / "C.csv"));
  ss.d = from_csv(read_file(dir / "D.csv"));
  ss.operating_point = find_equilibrium(cfg.plant, Equilibrium::kUpright);
  if (ss.a.rows() != cfg.plant.state_dim() || ss.b.rows() != ss.a.rows() ||
      ss.c.cols() != ss.a.rows()) {
    throw InvalidArgument("model in '" + model_dir + "' does not match the plant dimension");
  }
  return ss;
}

int cmd_linearize(const std::string& config_path, const std::string& out_dir,
                  const std::string& equilibrium, std::ostream& out) {
  const RunConfig cfg = load_config(config_path);
  const Equilibrium which = equilibrium == "hanging" ? Equilibrium::kHanging : Equilibrium::kUpright;
  const StateSpace ss = linearize(cfg.plant, find_equilibrium(cfg.plant, which));
  const fs::path dir(out_dir);
  prepare_output(dir, cfg, "linearize", config_path);
  write_file_atomic(dir / "A.csv", to_csv(ss.a));
  write_file_atomic(dir / "B.csv", to_csv(ss.b));
  write_file_atomic(dir / "C.csv", to_csv(ss.c));
  write_file_atomic(dir / "D.csv", to_csv(ss.d));
  const Json summary = summarize(ss);
  write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
  out << "linearized " << ss.state_dim() << "-state model about the " << equilibrium
      << " equilibrium; controllability rank " << summary["controllability_rank"].get<int>()
      << " -> " << dir.string() << "\n";
  return kOk;
}

Gains synthesize(const RunConfig& cfg, const StateSpace& ss, const std::string& method) {
  if (method == "lqr") return lqr_gain(ss.a, ss.b, ss.c, cfg.lqr_weights());
  return place_poles(ss.a, ss.b, ss.c, second_order_poles(cfg.pole_design, ss.state_dim()));
}

int cmd_synthesize(const std::string& config_path, const Overrides& overrides,
                   const std::string& method, const std::string& model_dir,
                   const std::string& out_dir, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(config_path);
  apply(overrides, cfg);
  const StateSpace ss = model_for(cfg, model_dir);
  const Gains gains = synthesize(cfg, ss, method);
  const fs::path dir(out_dir);
  prepare_output(dir, cfg, "synthesize", config_path);
  write_file_atomic(dir / "gains.json", to_json(gains).dump(2) + "\n");
  out << to_string(gains.method) << ": N = " << fmt_double(gains.n) << "\n";
  if (gains.ill_conditioned) {
    err << "warning: controllability matrix is ill-conditioned (sigma ratio "
        << fmt_double(*gains.controllability_ratio, 3) << "); achieved placement error "
        << fmt_double(*gains.placement_error, 3) << "\n";
  }
  return kOk;
}

int cmd_simulate(const std::string& config_path, const Overrides& overrides,
                 const std::string& gains_path, const std::string& out_dir, std::ostream& out) {
  RunConfig cfg = load_config(config_path);
  apply(overrides, cfg);
  cfg.simulation.validate(cfg.plant.state_dim());
  const Gains gains = gains_from_json(Json::parse(read_file(gains_path)));
  if (gains.k.size() != cfg.plant.state_dim()) {
    throw InvalidArgument("gains file K has " + std::to_string(gains.k.size()) +
                          " entries but the plant has " + std::to_string(cfg.plant.state_dim()) +
                          " states");
  }
  const SimTrace trace = simulate(cfg.plant, gains, cfg.simulation);
  const fs::path dir(out_dir);
  prepare_output(dir, cfg, "simulate", config_path);
  write_file_atomic(dir / "trace.csv", trace_to_csv(trace));
  Json report;
  report["outcome"] = to_string(trace.outcome);
  report["samples"] = trace.size();
  if (cfg.simulation.reference != 0.0) {
    report["metrics"] = to_json(metrics(trace, cfg.simulation.reference, cfg.simulation.step_time));
  }
  write_file_atomic(dir / "metrics.json", report.dump(2) + "\n");
  out << "simulation " << to_string(trace.outcome) << " after " << trace.size() << " samples";
  if (report.contains("metrics")) {
    out << "; stabilized = " << (report["metrics"]["stabilized"].get<bool>() ? "true" : "false");
  }
  out << "\n";
  return trace.outcome == Outcome::kDiverged ? kDiverged : kOk;
}

int cmd_sweep(const std::string& config_path, const Overrides& overrides,
              const std::vector<double>& ts_list, const std::string& out_dir, std::ostream& out) {
  RunConfig cfg = load_config(config_path);
  apply(overrides, cfg);
  if (!ts_list.empty()) cfg.sweep_settling_times = ts_list;
  if (overrides.dt) cfg.sweep_dt = *overrides.dt;
  cfg.pole_design.validate();
  const auto rows = sweep_settling_times(cfg.plant, cfg.pole_design, cfg.sweep_settling_times,
                                         cfg.sweep_simulation());
  const fs::path dir(out_dir);
  prepare_output(dir, cfg, "sweep", config_path);
  write_file_atomic(dir / "sweep.json", to_json(rows).dump(2) + "\n");
  out << "PO = " << fmt_double(cfg.pole_design.percent_overshoot) << "%\n";
  for (const auto& row : rows) {
    out << "  ts = " << fmt_double(row.settling_time) << " s: " << (row.stabilized ? "Yes" : "No");
    if (!row.reason.empty()) out << " (" << row.reason << ")";
    out << "\n";
  }
  return kOk;
}

int cmd_calibrate(const std::string& config_path, double target, std::ostream& out) {
  const RunConfig cfg = load_config(config_path);
  const CartMassFit fit = calibrate_cart_mass(cfg.plant, target);
  out << "cart_mass = " << fmt_double(fit.cart_mass, 12) << " kg (B(2) = "
      << fmt_double(fit.achieved, 12) << ", " << fit.iterations << " secant steps)\n";
  return kOk;
}

Json deviation_table(const Comparison& cmp) {
  Json rows = Json::array();
  for (const auto& e : cmp.entries) {
    rows.push_back({{"row", e.row + 1},
                    {"col", e.col + 1},
                    {"computed", e.computed},
                    {"reference", e.reference},
                    {e.relative ? "relative_deviation" : "absolute_deviation", e.deviation},
                    {"within", e.within}});
  }
  return rows;
}

int cmd_check_reference(const std::string& config_path, const std::string& fixture_dir,
                        const std::string& out_dir, std::ostream& out) {
  const RunConfig cfg = load_config(config_path);
  const fs::path fixtures(fixture_dir);
  const Matrix ref_a = from_csv(read_file(fixtures / "A.csv"));
  const Matrix ref_b = from_csv(read_file(fixtures / "B.csv"));
  const Matrix ref_k_lqr = from_csv(read_file(fixtures / "K_lqr.csv"));
  const Matrix ref_k_pp = from_csv(read_file(fixtures / "K_pp.csv"));
  const Json values = Json::parse(read_file(fixtures / "values.json"));

  const CartMassFit fit = calibrate_cart_mass(cfg.plant, values.at("cart_input_gain").get<double>());
  PlantParams plant = cfg.plant;
  plant.cart_mass = fit.cart_mass;
  const StateSpace ss = linearize(plant, find_equilibrium(plant, Equilibrium::kUpright));
  if (ss.a.rows() != ref_a.rows()) throw InvalidArgument("fixture dimension does not match the plant");

  const Comparison cmp_a = compare_to_reference(ss.a, ref_a);
  const Comparison cmp_b = compare_to_reference(ss.b, ref_b);

  const Gains lqr = lqr_gain(ss.a, ss.b, ss.c, cfg.lqr_weights());
  const Gains pp = place_poles(ss.a, ss.b, ss.c, second_order_poles(cfg.pole_design, ss.state_dim()));

  int sign_matches = 0;
  for (Eigen::Index i = 0; i < ref_k_lqr.size(); ++i) {
    if ((lqr.k(i) >= 0.0) == (ref_k_lqr(i) >= 0.0)) ++sign_matches;
  }
  const double lead_dev = std::abs(lqr.k(0) - ref_k_lqr(0)) / std::abs(ref_k_lqr(0));
  const double n_lqr_ref = values.at("N_lqr").get<double>();
  const double n_pp_ref = values.at("N_pp").get<double>();
  const bool n_lqr_ok = std::abs(lqr.n - n_lqr_ref) <= 1e-3;
  const bool n_pp_ok = std::abs(pp.n - n_pp_ref) <= 0.01 * n_pp_ref;
  const bool hard_ok = cmp_a.all_within() && cmp_b.all_within() &&
                       sign_matches == ref_k_lqr.size() && lead_dev <= 0.15 && n_lqr_ok;

  Json report;
  report["fitted_cart_mass"] = fit.cart_mass;
  report["A"] = {{"within", cmp_a.within}, {"entries", cmp_a.entries.size()}, {"table", deviation_table(cmp_a)}};
  report["B"] = {{"within", cmp_b.within}, {"entries", cmp_b.entries.size()}, {"table", deviation_table(cmp_b)}};
  report["K_lqr"] = {{"computed", to_json(lqr)["K"]}, {"sign_matches", sign_matches},
                     {"leading_relative_deviation", lead_dev},
                     {"table", deviation_table(compare_to_reference(lqr.k, ref_k_lqr, 0.15))}};
  report["N_lqr"] = {{"computed", lqr.n}, {"reference", n_lqr_ref}, {"within", n_lqr_ok}};
  report["K_pp"] = {{"computed", to_json(pp)["K"]},
                    {"table", deviation_table(compare_to_reference(pp.k, ref_k_pp, 0.01))}};
  report["N_pp"] = {{"computed", pp.n}, {"reference", n_pp_ref}, {"within", n_pp_ok}};
  report["passed"] = hard_ok;

  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    prepare_output(dir, cfg, "check-reference", config_path);
    write_file_atomic(dir / "report.json", report.dump(2) + "\n");
  }

  out << "fitted cart mass: " << fmt_double(fit.cart_mass, 10) << " kg\n";
  out << "A: " << cmp_a.within << "/" << cmp_a.entries.size() << " entries within tolerance\n";
  out << "B: " << cmp_b.within << "/" << cmp_b.entries.size() << " entries within tolerance\n";
  for (const auto* cmp : {&cmp_a, &cmp_b}) {
    for (const auto& e : cmp->entries) {
      if (e.reference == 0.0 && e.within) continue;
      if (!e.within) {
        out << "  (" << e.row + 1 << "," << e.col + 1 << ") computed " << fmt_double(e.computed, 8)
            << " reference " << fmt_double(e.reference, 8) << " deviation " << fmt_double(e.deviation, 3)
            << "\n";
      }
    }
  }
  out << "K_lqr: sign pattern " << sign_matches << "/" << ref_k_lqr.size()
      << ", leading entry deviation " << fmt_double(100.0 * lead_dev, 3) << "%\n";
  out << "N_lqr: " << fmt_double(lqr.n, 8) << " (reference " << n_lqr_ref << ") "
      << (n_lqr_ok ? "ok" : "MISMATCH") << "\n";
  out << "N_pp:  " << fmt_double(pp.n, 8) << " (reference " << n_pp_ref << ") "
      << (n_pp_ok ? "ok" : "differs (far-pole layout of the reference design is not recoverable)")
      << "\n";
  out << (hard_ok ? "reference check passed\n" : "reference check FAILED\n");
  return hard_ok ? kOk : kRegression;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kValidation:
      return kValidation;
    case ErrorKind::kSynthesis:
      return kSynthesis;
    case ErrorKind::kSimulation:
      return kDiverged;
    case ErrorKind::kNumerical:
      return kSynthesis;
  }
  return kInternal;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Model, linearize, control and simulate an n-link inverted pendulum on a cart", "qip"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 success, 1 internal error, 2 invalid input/config, "
      "3 synthesis failure, 4 simulation diverged, 5 reference check failed.");

  std::string config_path;
  std::string out_dir = "out";
  Overrides overrides;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config,-c", config_path, "Plant/run config file")->required();
    cmd->add_option("--out,-o", out_dir, "Output directory");
  };
  auto add_sim_flags = [&](CLI::App* cmd) {
    cmd->add_option("--seed", overrides.seed, "Disturbance RNG seed");
    cmd->add_option("--dt", overrides.dt, "Integration step [s]");
    cmd->add_option("--duration", overrides.duration, "Simulated time [s]");
    cmd->add_option("--rho", overrides.rho, "Reference step amplitude [m]");
  };

  auto* lin = app.add_subcommand("linearize", "Write A, B, C, D and a summary for an equilibrium");
  add_config(lin);
  std::string equilibrium = "upright";
  lin->add_option("--equilibrium", equilibrium)->check(CLI::IsMember({"upright", "hanging"}));

  auto* syn = app.add_subcommand("synthesize", "Compute K and N by LQR or pole placement");
  add_config(syn);
  std::string method = "lqr";
  std::string model_dir;
  syn->add_option("--method,-m", method)->check(CLI::IsMember({"lqr", "pp"}));
  syn->add_option("--po", overrides.po, "Percent overshoot for pole placement");
  syn->add_option("--ts", overrides.ts, "Settling time for pole placement [s]");
  syn->add_option("--model", model_dir, "Directory with A.csv, B.csv, C.csv, D.csv from linearize");

  auto* sim = app.add_subcommand("simulate", "Closed-loop nonlinear simulation");
  add_config(sim);
  std::string gains_path;
  sim->add_option("--gains,-g", gains_path, "gains.json from synthesize")->required();
  add_sim_flags(sim);

  auto* swp = app.add_subcommand("sweep", "Pole-placement settling-time sweep");
  add_config(swp);
  std::vector<double> ts_list;
  swp->add_option("--ts", ts_list, "Settling times [s], comma separated")->delimiter(',');
  swp->add_option("--po", overrides.po, "Percent overshoot");
  add_sim_flags(swp);

  auto* cal = app.add_subcommand("calibrate", "Fit the cart mass to a target cart input gain B(2)");
  add_config(cal);
  double target = 7.76;
  cal->add_option("--target", target, "Target B(2)");

  auto* chk = app.add_subcommand("check-reference",
                                 "Run the full pipeline and report deviations from the bundled reference values");
  chk->alias("check-paper");
  chk->add_option("--config,-c", config_path, "Plant/run config file")->required();
  std::string check_out;
  chk->add_option("--out,-o", check_out, "Optional output directory for report.json");
  std::string fixture_dir = QIP_FIXTURE_DIR;
  chk->add_option("--fixtures", fixture_dir, "Reference fixture directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*lin) return cmd_linearize(config_path, out_dir, equilibrium, out);
    if (*syn) return cmd_synthesize(config_path, overrides, method, model_dir, out_dir, out, err);
    if (*sim) return cmd_simulate(config_path, overrides, gains_path, out_dir, out);
    if (*swp) return cmd_sweep(config_path, overrides, ts_list, out_dir, out);
    if (*cal) return cmd_calibrate(config_path, target, out);
    if (*chk) return cmd_check_reference(config_path, fixture_dir, check_out, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const Json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

}  // namespace qip::cli
