#include "qip/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "qip/errors.hpp"

namespace qip {

double inf_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

void require_finite(const Matrix& a, std::string_view what) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw InvalidArgument(std::string(what) + ": empty matrix");
  }
  if (!a.allFinite()) {
    throw InvalidArgument(std::string(what) + ": non-finite entry");
  }
}

Matrix lu_solve(const Matrix& a, const Matrix& b) {
  require_finite(a, "lu_solve A");
  require_finite(b, "lu_solve B");
  if (a.rows() != a.cols()) throw InvalidArgument("lu_solve: A must be square");
  if (b.rows() != a.rows()) {
    throw InvalidArgument("lu_solve: B row count does not match A");
  }

  const Eigen::Index n = a.rows();
  const double threshold = 1e-13 * inf_norm(a);
  Matrix lu = a;
  Matrix x = b;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index pivot = k;
    lu.col(k).tail(n - k).cwiseAbs().maxCoeff(&pivot);
    pivot += k;
    if (!(std::abs(lu(pivot, k)) > threshold)) {
      throw SingularMatrix("lu_solve: pivot " + std::to_string(k) +
                           " below 1e-13*||A||");
    }
    if (pivot != k) {
      lu.row(k).swap(lu.row(pivot));
      x.row(k).swap(x.row(pivot));
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double factor = lu(i, k) / lu(k, k);
      if (factor == 0.0) continue;
      lu.row(i).tail(n - k - 1) -= factor * lu.row(k).tail(n - k - 1);
      x.row(i) -= factor * x.row(k);
    }
  }
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    for (Eigen::Index j = k + 1; j < n; ++j) x.row(k) -= lu(k, j) * x.row(j);
    x.row(k) /= lu(k, k);
  }
  return x;
}

Vector balancing_scale(const Matrix& a) {
  // Parlett-Reinsch iteration without permutations, radix 2.
  const Eigen::Index n = a.rows();
  Vector d = Vector::Ones(n);
  Matrix m = a;
  bool converged = false;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    converged = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0;
      double r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(m(j, i));
        r += std::abs(m(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0;
      double g = r / 2.0;
      while (c < g) {
        f *= 2.0;
        c *= 4.0;
      }
      g = r * 2.0;
      while (c >= g) {
        f /= 2.0;
        c /= 4.0;
      }
      if ((c + r) / f < 0.95 * s) {
        converged = false;
        d(i) *= f;
        m.row(i) /= f;
        m.col(i) *= f;
      }
    }
  }
  return d;
}

Spectrum eigenvalues(const Matrix& a) {
  require_finite(a, "eigenvalues");
  if (a.rows() != a.cols()) throw InvalidArgument("eigenvalues: matrix must be square");

  const Vector d = balancing_scale(a);
  const Matrix balanced = d.cwiseInverse().asDiagonal() * a * d.asDiagonal();

  Eigen::EigenSolver<Matrix> solver;
  solver.setMaxIterations(100);  // per eigenvalue, i.e. 100·n sweeps overall
  solver.compute(balanced, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NoConvergence("eigenvalues: QR iteration did not converge");
  }
  const auto& values = solver.eigenvalues();
  return Spectrum(values.data(), values.data() + values.size());
}

Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols()) throw InvalidArgument("controllability: A must be square");
  if (b.cols() != 1 || b.rows() != a.rows()) {
    throw InvalidArgument("controllability: B must be a column conformant with A");
  }
  const Eigen::Index n = a.rows();
  Matrix c(n, n);
  c.col(0) = b;
  for (Eigen::Index k = 1; k < n; ++k) c.col(k) = a * c.col(k - 1);
  return c;
}

RankEstimate numerical_rank(const Matrix& a, double rel_tol) {
  require_finite(a, "numerical_rank");
  Matrix scaled = a;
  for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
    const double norm = scaled.col(j).norm();
    if (norm > 0.0) scaled.col(j) /= norm;
  }
  Eigen::JacobiSVD<Matrix> svd(scaled);
  const Vector& s = svd.singularValues();
  RankEstimate est;
  if (s.size() == 0 || s(0) == 0.0) return est;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0)) ++est.rank;
  }
  est.sigma_ratio = s(s.size() - 1) / s(0);
  return est;
}

double spectrum_mismatch(const Spectrum& got, const Spectrum& want) {
  if (got.size() != want.size()) return std::numeric_limits<double>::infinity();
  std::vector<bool> used(got.size(), false);
  double worst = 0.0;
  for (const auto& mu : want) {
    std::size_t best = got.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (used[i]) continue;
      const double dist = std::abs(got[i] - mu);
      if (dist < best_dist) {
        best_dist = dist;
        best = i;
      }
    }
    used[best] = true;
    worst = std::max(worst, best_dist / std::max(1.0, std::abs(mu)));
  }
  return worst;
}

std::string to_csv(const Matrix& a) {
  std::string out;
  char buf[32];
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", a(i, j));
      if (j > 0) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Matrix from_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InvalidArgument("csv line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InvalidArgument("csv line " + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument("csv: no rows");
  Matrix a(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) a(i, j) = rows[i][j];
  }
  require_finite(a, "csv");
  return a;
}

}  // namespace qip
