#pragma once

#include <vector>

#include "qip/linalg.hpp"

namespace qip {

struct EntryDeviation {
  int row = 0;
  int col = 0;
  double computed = 0.0;
  double reference = 0.0;
  double deviation = 0.0;  // relative, or absolute for small reference entries
  bool relative = true;
  bool within = false;
};

struct Comparison {
  std::vector<EntryDeviation> entries;
  int within = 0;
  int nonzero_total = 0;
  int nonzero_within = 0;

  bool all_within() const { return within == static_cast<int>(entries.size()); }
};

/// Elementwise check: entries with |reference| < small_threshold use the
/// absolute tolerance, the rest the relative one.
Comparison compare_to_reference(const Matrix& computed, const Matrix& reference,
                                double rel_tol = 0.005, double small_threshold = 1.0,
                                double abs_tol = 0.05);

}  // namespace qip
