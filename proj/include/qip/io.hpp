#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qip/linearization.hpp"
#include "qip/simulation.hpp"
#include "qip/synthesis.hpp"

namespace qip {

using Json = nlohmann::ordered_json;

Json to_json(const Spectrum& s);  // [[re, im], ...]
Json to_json(const Gains& g);     // {method, K, N, closed_loop_poles, ...}
Json to_json(const ResponseMetrics& m);
Json to_json(const SweepRow& row);
Json to_json(const std::vector<SweepRow>& rows);

/// Dimensions, operating point, open-loop eigenvalues and controllability rank.
Json summarize(const StateSpace& ss);

/// Reads K and N back from to_json(Gains) output; diagnostics are dropped.
Gains gains_from_json(const Json& j);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace qip
