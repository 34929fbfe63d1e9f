#include "qip/reference.hpp"

#include <cmath>

#include "qip/errors.hpp"

namespace qip {

Comparison compare_to_reference(const Matrix& computed, const Matrix& reference,
                                double rel_tol, double small_threshold, double abs_tol) {
  if (computed.rows() != reference.rows() || computed.cols() != reference.cols()) {
    throw InvalidArgument("compare_to_reference: shape mismatch");
  }
  Comparison cmp;
  for (Eigen::Index i = 0; i < reference.rows(); ++i) {
    for (Eigen::Index j = 0; j < reference.cols(); ++j) {
      EntryDeviation e;
      e.row = static_cast<int>(i);
      e.col = static_cast<int>(j);
      e.computed = computed(i, j);
      e.reference = reference(i, j);
      e.relative = std::abs(e.reference) >= small_threshold;
      if (e.relative) {
        e.deviation = std::abs(e.computed - e.reference) / std::abs(e.reference);
        e.within = e.deviation <= rel_tol;
      } else {
        e.deviation = std::abs(e.computed - e.reference);
        e.within = e.deviation <= abs_tol;
      }
      if (e.within) ++cmp.within;
      if (e.reference != 0.0) {
        ++cmp.nonzero_total;
        if (e.within) ++cmp.nonzero_within;
      }
      cmp.entries.push_back(e);
    }
  }
  return cmp;
}

}  // namespace qip
