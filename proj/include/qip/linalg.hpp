#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <string_view>
#include <vector>

namespace qip {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Eigenvalues of a real square matrix, in no particular order.
using Spectrum = std::vector<std::complex<double>>;

/// Max absolute row sum.
double inf_norm(const Matrix& a);

/// Throws InvalidArgument naming `what` if `a` is empty or holds NaN/Inf.
void require_finite(const Matrix& a, std::string_view what);

/// Solves A·X = B by LU with partial pivoting.
/// Throws SingularMatrix when a pivot falls below 1e-13·‖A‖∞.
Matrix lu_solve(const Matrix& a, const Matrix& b);

/// All eigenvalues of a general real matrix. The matrix is balanced by
/// diagonal similarity before the Hessenberg/QR iteration, which matters for
/// the strongly graded closed-loop matrices produced by pole placement.
/// Throws NoConvergence if the QR iteration stalls.
Spectrum eigenvalues(const Matrix& a);

/// [B, AB, A²B, ..., Aⁿ⁻¹B] for a single-column B.
Matrix controllability_matrix(const Matrix& a, const Matrix& b);

struct RankEstimate {
  int rank = 0;
  /// σ_min/σ_max of the column-equilibrated matrix.
  double sigma_ratio = 0.0;
};

/// Numerical rank after scaling every column to unit 2-norm. Column scaling
/// makes the estimate independent of the geometric growth of Krylov columns.
RankEstimate numerical_rank(const Matrix& a, double rel_tol = 1e-10);

/// Diagonal similarity D⁻¹·A·D with power-of-two entries in D that roughly
/// equalizes row and column norms. Returns D as a vector.
Vector balancing_scale(const Matrix& a);

/// Pairs each desired eigenvalue with its nearest unused computed one
/// (greedy) and returns the worst |λ - μ| / max(1, |μ|).
double spectrum_mismatch(const Spectrum& got, const Spectrum& want);

/// Plain-text matrix form: one row per line, comma separated, %.17g.
std::string to_csv(const Matrix& a);
Matrix from_csv(std::string_view text);

}  // namespace qip
