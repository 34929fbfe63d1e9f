#include "qip/io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include "qip/errors.hpp"

namespace qip {

Json to_json(const Spectrum& s) {
  Json out = Json::array();
  for (const auto& z : s) out.push_back({z.real(), z.imag()});
  return out;
}

Json to_json(const Gains& g) {
  Json j;
  j["method"] = to_string(g.method);
  j["K"] = std::vector<double>(g.k.data(), g.k.data() + g.k.size());
  j["N"] = g.n;
  j["closed_loop_poles"] = to_json(g.closed_loop_poles);
  if (g.riccati_residual) j["residual"] = *g.riccati_residual;
  if (g.controllability_ratio) j["controllability_sigma_ratio"] = *g.controllability_ratio;
  if (g.placement_error) j["placement_error"] = *g.placement_error;
  if (g.method == Method::kPolePlacement) j["ill_conditioned"] = g.ill_conditioned;
  return j;
}

Json to_json(const ResponseMetrics& m) {
  Json j;
  j["stabilized"] = m.stabilized;
  j["overshoot_percent"] = m.overshoot ? Json(*m.overshoot) : Json(nullptr);
  j["settling_time"] = m.settling_time ? Json(*m.settling_time) : Json(nullptr);
  j["steady_state_error"] = m.steady_state_error ? Json(*m.steady_state_error) : Json(nullptr);
  j["peak_angles"] = m.peak_angles;
  return j;
}

Json to_json(const SweepRow& row) {
  Json j;
  j["ts"] = row.settling_time;
  j["stabilized"] = row.stabilized;
  if (!row.reason.empty()) j["reason"] = row.reason;
  if (row.outcome) j["outcome"] = to_string(*row.outcome);
  if (row.gains) j["gains"] = to_json(*row.gains);
  if (row.response) j["metrics"] = to_json(*row.response);
  return j;
}

Json to_json(const std::vector<SweepRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) out.push_back(to_json(r));
  return out;
}

Json summarize(const StateSpace& ss) {
  Json j;
  j["ordering"] = "interleaved";
  j["states"] = ss.a.rows();
  j["inputs"] = ss.b.cols();
  j["outputs"] = ss.c.rows();
  const Vector x = to_interleaved(ss.operating_point.state);
  j["operating_point"] = {{"state", std::vector<double>(x.data(), x.data() + x.size())},
                          {"force", ss.operating_point.force}};
  j["open_loop_eigenvalues"] = to_json(eigenvalues(ss.a));
  const RankEstimate rank = numerical_rank(controllability_matrix(ss.a, ss.b));
  j["controllability_rank"] = rank.rank;
  j["controllability_sigma_ratio"] = rank.sigma_ratio;
  return j;
}

Gains gains_from_json(const Json& j) {
  try {
    Gains g;
    g.method = method_from_string(j.at("method").get<std::string>());
    const auto k = j.at("K").get<std::vector<double>>();
    g.k = Eigen::Map<const RowVector>(k.data(), static_cast<Eigen::Index>(k.size()));
    g.n = j.at("N").get<double>();
    if (k.empty() || !g.k.allFinite() || !std::isfinite(g.n)) {
      throw InvalidArgument("gains: K and N must be finite and non-empty");
    }
    return g;
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("gains: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw InvalidArgument("short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InvalidArgument("cannot rename onto '" + path.string() + "': " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace qip
