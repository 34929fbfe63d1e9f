#include "qip/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <fstream>
#include <map>
#include <sstream>

#include "qip/errors.hpp"

namespace qip {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

using Section = std::map<std::string, Entry>;

class Document {
 public:
  explicit Document(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const std::string line = trim(raw);
      if (line.empty() || line[0] == '#' || line[0] == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(line_no, "unterminated section header");
        section = trim(std::string_view(line).substr(1, line.size() - 2));
        static const char* known[] = {"plant", "lqr", "pole_placement", "simulation", "sweep"};
        if (std::find(std::begin(known), std::end(known), section) == std::end(known)) {
          fail(line_no, "unknown section [" + section + "]");
        }
        sections_[section];
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(line_no, "expected key = value");
      if (section.empty()) fail(line_no, "key outside of any section");
      const std::string key = trim(std::string_view(line).substr(0, eq));
      std::string value = trim(std::string_view(line).substr(eq + 1));
      if (const auto hash = value.find('#'); hash != std::string::npos) value = trim(value.substr(0, hash));
      if (key.empty()) fail(line_no, "empty key");
      auto& sec = sections_[section];
      if (sec.count(key)) fail(line_no, "duplicate key '" + key + "'");
      sec[key] = Entry{value, line_no, false};
    }
  }

  const Entry* find(const std::string& section, const std::string& key) {
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto e = s->second.find(key);
    if (e == s->second.end()) return nullptr;
    e->second.used = true;
    return &e->second;
  }

  void reject_unused() const {
    for (const auto& [name, sec] : sections_) {
      for (const auto& [key, entry] : sec) {
        if (!entry.used) fail(entry.line, "unknown key '" + key + "' in [" + name + "]");
      }
    }
  }

  [[noreturn]] static void fail(int line, const std::string& msg) {
    throw ConfigError("line " + std::to_string(line) + ": " + msg);
  }

 private:
  std::map<std::string, Section> sections_;
};

double parse_number(const Entry& e, const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (used != e.value.size() || !std::isfinite(v)) throw std::invalid_argument(e.value);
    return v;
  } catch (const std::exception&) {
    Document::fail(e.line, field + ": expected a number, got '" + e.value + "'");
  }
}

std::vector<double> parse_list(const Entry& e, const std::string& field) {
  const std::string& v = e.value;
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
    Document::fail(e.line, field + ": expected a list like [1, 2, 3]");
  }
  std::vector<double> out;
  std::istringstream cells(v.substr(1, v.size() - 2));
  std::string cell;
  while (std::getline(cells, cell, ',')) {
    Entry item{trim(cell), e.line, true};
    if (item.value.empty()) continue;
    out.push_back(parse_number(item, field));
  }
  return out;
}

template <typename Fn>
void with(Document& doc, const std::string& section, const std::string& key, Fn&& fn) {
  if (const Entry* e = doc.find(section, key)) fn(*e, section + "." + key);
}

// Validation errors carry the field name; pin them to the line that set it.
template <typename Fn>
void validate_at(Document& doc, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    const std::string msg = e.what();
    const auto dot = msg.find('.');
    const auto colon = msg.find(':');
    if (dot != std::string::npos && colon != std::string::npos && dot < colon) {
      std::string section = msg.substr(0, dot);
      std::string key = msg.substr(dot + 1, colon - dot - 1);
      if (const auto bracket = key.find('['); bracket != std::string::npos) key = key.substr(0, bracket);
      if (const Entry* entry = doc.find(section, key)) Document::fail(entry->line, msg);
    }
    throw ConfigError(msg);
  }
}

}  // namespace

LqrWeights RunConfig::lqr_weights() const {
  return lqr ? *lqr : LqrWeights::position_heavy(plant.state_dim());
}

SimConfig RunConfig::sweep_simulation() const {
  SimConfig cfg = simulation;
  if (sweep_dt) cfg.dt = *sweep_dt;
  return cfg;
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  Document doc(text);
  RunConfig cfg;
  PlantParams& plant = cfg.plant;

  with(doc, "plant", "n", [&](const Entry& e, const std::string& f) {
    const double n = parse_number(e, f);
    if (n < 1 || n != std::floor(n)) Document::fail(e.line, f + ": must be a positive integer");
    plant.links = static_cast<int>(n);
  });
  with(doc, "plant", "cart_mass", [&](const Entry& e, const std::string& f) { plant.cart_mass = parse_number(e, f); });
  with(doc, "plant", "masses", [&](const Entry& e, const std::string& f) { plant.masses = parse_list(e, f); });
  with(doc, "plant", "lengths", [&](const Entry& e, const std::string& f) { plant.lengths = parse_list(e, f); });
  with(doc, "plant", "gravity", [&](const Entry& e, const std::string& f) { plant.gravity = parse_number(e, f); });
  with(doc, "plant", "damping", [&](const Entry& e, const std::string& f) {
    if (e.value == "zero") return;
    const std::filesystem::path path = base_dir / e.value;
    std::ifstream in(path);
    if (!in) Document::fail(e.line, f + ": cannot open '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      plant.damping = from_csv(buf.str());
    } catch (const Error& err) {
      Document::fail(e.line, f + ": " + err.what());
    }
  });
  validate_at(doc, [&] { plant.validate(); });

  std::optional<std::vector<double>> q_diag;
  std::optional<double> r_weight;
  with(doc, "lqr", "q_diag", [&](const Entry& e, const std::string& f) { q_diag = parse_list(e, f); });
  with(doc, "lqr", "r", [&](const Entry& e, const std::string& f) { r_weight = parse_number(e, f); });
  if (q_diag || r_weight) {
    LqrWeights w = LqrWeights::position_heavy(plant.state_dim());
    if (q_diag) {
      if (static_cast<int>(q_diag->size()) != plant.state_dim()) {
        Document::fail(doc.find("lqr", "q_diag")->line,
                       "lqr.q_diag: expected " + std::to_string(plant.state_dim()) + " entries");
      }
      w.q = Eigen::Map<const Vector>(q_diag->data(), q_diag->size()).asDiagonal();
    }
    if (r_weight) w.r(0, 0) = *r_weight;
    validate_at(doc, [&] { w.validate(plant.state_dim()); });
    cfg.lqr = w;
  }

  PoleDesign& pole = cfg.pole_design;
  with(doc, "pole_placement", "po", [&](const Entry& e, const std::string& f) { pole.percent_overshoot = parse_number(e, f); });
  with(doc, "pole_placement", "ts", [&](const Entry& e, const std::string& f) { pole.settling_time = parse_number(e, f); });
  with(doc, "pole_placement", "spread", [&](const Entry& e, const std::string& f) { pole.spread = parse_number(e, f); });
  with(doc, "pole_placement", "far_pole_spacing", [&](const Entry& e, const std::string& f) { pole.far_pole_spacing = parse_number(e, f); });
  validate_at(doc, [&] { pole.validate(); });

  SimConfig& sim = cfg.simulation;
  double force_noise = 0.0;
  double torque_noise = 0.0;
  std::string noise_parameter = "variance";
  with(doc, "simulation", "dt", [&](const Entry& e, const std::string& f) { sim.dt = parse_number(e, f); });
  with(doc, "simulation", "duration", [&](const Entry& e, const std::string& f) { sim.duration = parse_number(e, f); });
  with(doc, "simulation", "rho", [&](const Entry& e, const std::string& f) { sim.reference = parse_number(e, f); });
  with(doc, "simulation", "step_time", [&](const Entry& e, const std::string& f) { sim.step_time = parse_number(e, f); });
  with(doc, "simulation", "seed", [&](const Entry& e, const std::string& f) {
    const double s = parse_number(e, f);
    if (s < 0 || s != std::floor(s) || s > 9.007199254740992e15) {
      Document::fail(e.line, f + ": must be a non-negative integer");
    }
    sim.seed = static_cast<std::uint64_t>(s);
  });
  with(doc, "simulation", "initial_state", [&](const Entry& e, const std::string& f) {
    const auto v = parse_list(e, f);
    sim.initial_state = Eigen::Map<const Vector>(v.data(), v.size());
  });
  with(doc, "simulation", "force_noise", [&](const Entry& e, const std::string& f) { force_noise = parse_number(e, f); });
  with(doc, "simulation", "torque_noise", [&](const Entry& e, const std::string& f) { torque_noise = parse_number(e, f); });
  with(doc, "simulation", "noise_parameter", [&](const Entry& e, const std::string& f) {
    if (e.value != "variance" && e.value != "stddev") {
      Document::fail(e.line, f + ": expected 'variance' or 'stddev'");
    }
    noise_parameter = e.value;
  });
  with(doc, "simulation", "angle_limit", [&](const Entry& e, const std::string& f) {
    sim.angle_limit = e.value == "none" ? std::numeric_limits<double>::infinity() : parse_number(e, f);
  });
  if (force_noise < 0.0 || torque_noise < 0.0) {
    throw ConfigError("simulation: noise parameters must be non-negative");
  }
  if (noise_parameter == "variance") {
    sim.force_stddev = std::sqrt(force_noise);
    sim.torque_stddev = std::sqrt(torque_noise);
  } else {
    sim.force_stddev = force_noise;
    sim.torque_stddev = torque_noise;
  }

  with(doc, "sweep", "ts", [&](const Entry& e, const std::string& f) { cfg.sweep_settling_times = parse_list(e, f); });
  with(doc, "sweep", "dt", [&](const Entry& e, const std::string& f) { cfg.sweep_dt = parse_number(e, f); });

  doc.reject_unused();
  validate_at(doc, [&] { sim.validate(plant.state_dim()); });
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string format_config(const RunConfig& cfg, const std::string& damping_file) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto list = [&](const auto& values) {
    std::string out = "[";
    bool first = true;
    for (double v : values) {
      if (!first) out += ", ";
      out += num(v);
      first = false;
    }
    return out + "]";
  };

  const PlantParams& p = cfg.plant;
  std::string out = "[plant]\n";
  out += "n = " + std::to_string(p.links) + "\n";
  out += "cart_mass = " + num(p.cart_mass) + "\n";
  out += "masses = " + list(p.masses) + "\n";
  out += "lengths = " + list(p.lengths) + "\n";
  out += "gravity = " + num(p.gravity) + "\n";
  const bool zero_damping = p.damping.size() == 0 || p.damping.isZero(0.0);
  out += "damping = " + (zero_damping ? std::string("zero") : damping_file) + "\n";

  const LqrWeights w = cfg.lqr_weights();
  const Vector q_diag = w.q.diagonal();
  out += "\n[lqr]\n";
  out += "q_diag = " + list(std::vector<double>(q_diag.data(), q_diag.data() + q_diag.size())) + "\n";
  out += "r = " + num(w.r(0, 0)) + "\n";

  const PoleDesign& d = cfg.pole_design;
  out += "\n[pole_placement]\n";
  out += "po = " + num(d.percent_overshoot) + "\n";
  out += "ts = " + num(d.settling_time) + "\n";
  out += "spread = " + num(d.spread) + "\n";
  out += "far_pole_spacing = " + num(d.far_pole_spacing) + "\n";

  const SimConfig& s = cfg.simulation;
  out += "\n[simulation]\n";
  out += "dt = " + num(s.dt) + "\n";
  out += "duration = " + num(s.duration) + "\n";
  out += "rho = " + num(s.reference) + "\n";
  out += "step_time = " + num(s.step_time) + "\n";
  out += "seed = " + std::to_string(s.seed) + "\n";
  if (s.initial_state.size() != 0) {
    out += "initial_state = " +
           list(std::vector<double>(s.initial_state.data(),
                                    s.initial_state.data() + s.initial_state.size())) +
           "\n";
  }
  out += "noise_parameter = stddev\n";
  out += "force_noise = " + num(s.force_stddev) + "\n";
  out += "torque_noise = " + num(s.torque_stddev) + "\n";
  out += "angle_limit = " + (std::isinf(s.angle_limit) ? std::string("none") : num(s.angle_limit)) + "\n";

  out += "\n[sweep]\n";
  out += "ts = " + list(cfg.sweep_settling_times) + "\n";
  if (cfg.sweep_dt) out += "dt = " + num(*cfg.sweep_dt) + "\n";
  return out;
}

}  // namespace qip
