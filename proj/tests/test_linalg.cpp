#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <ranges>

#include "qip/dynamics.hpp"
#include "qip/errors.hpp"
#include "qip/linalg.hpp"
#include "qip/linearization.hpp"
#include "support.hpp"

using namespace qip;

namespace {

std::vector<double> sorted_real(const Spectrum& s) {
  std::vector<double> out;
  for (const auto& z : s) out.push_back(z.real());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(LuSolve, IdentityReturnsRightHandSide) {
  const Matrix b = (Matrix(3, 2) << 1, 2, 3, 4, 5, 6).finished();
  EXPECT_TRUE(lu_solve(Matrix::Identity(3, 3), b).isApprox(b, 1e-15));
}

TEST(LuSolve, Diagonal) {
  const Matrix a = (Matrix(2, 2) << 2, 0, 0, 4).finished();
  const Matrix b = (Matrix(2, 1) << 2, 8).finished();
  const Matrix x = lu_solve(a, b);
  EXPECT_DOUBLE_EQ(x(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(x(1, 0), 2.0);
}

TEST(LuSolve, RequiresPivoting) {
  const Matrix a = (Matrix(2, 2) << 0, 1, 1, 0).finished();
  const Matrix b = (Matrix(2, 1) << 3, 5).finished();
  const Matrix x = lu_solve(a, b);
  EXPECT_DOUBLE_EQ(x(0, 0), 5.0);
  EXPECT_DOUBLE_EQ(x(1, 0), 3.0);
}

TEST(LuSolve, SingularThrows) {
  const Matrix a = (Matrix(2, 2) << 1, 2, 2, 4).finished();
  EXPECT_THROW(lu_solve(a, Matrix::Ones(2, 1)), SingularMatrix);
}

TEST(LuSolve, RejectsNonFiniteAndShapeMismatch) {
  Matrix a = Matrix::Identity(2, 2);
  a(0, 1) = std::nan("");
  EXPECT_THROW(lu_solve(a, Matrix::Ones(2, 1)), InvalidArgument);
  EXPECT_THROW(lu_solve(Matrix::Identity(2, 2), Matrix::Ones(3, 1)), InvalidArgument);
  EXPECT_THROW(lu_solve(Matrix::Ones(2, 3), Matrix::Ones(2, 1)), InvalidArgument);
}

TEST(LuSolve, PropertyInverseOnRandomWellConditionedMatrices) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 9;
    const Matrix a = oracle::random_matrix(rng, n, n) + 3.0 * n * Matrix::Identity(n, n);
    const Matrix x = lu_solve(a, Matrix::Identity(n, n));
    EXPECT_LT((a * x - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Eigenvalues, Identity) {
  const Spectrum s = eigenvalues(Matrix::Identity(2, 2));
  ASSERT_EQ(s.size(), 2u);
  for (const auto& z : s) EXPECT_NEAR(std::abs(z - 1.0), 0.0, 1e-14);
}

TEST(Eigenvalues, TwoByTwoCompanion) {
  const Matrix a = (Matrix(2, 2) << 0, 1, -2, -3).finished();
  const auto r = sorted_real(eigenvalues(a));
  EXPECT_NEAR(r[0], -2.0, 1e-12);
  EXPECT_NEAR(r[1], -1.0, 1e-12);
}

TEST(Eigenvalues, CubicCompanion) {
  // (s+1)(s+2)(s+3) = s³ + 6s² + 11s + 6
  const Matrix a = (Matrix(3, 3) << 0, 1, 0, 0, 0, 1, -6, -11, -6).finished();
  const auto r = sorted_real(eigenvalues(a));
  EXPECT_NEAR(r[0], -3.0, 1e-10);
  EXPECT_NEAR(r[1], -2.0, 1e-10);
  EXPECT_NEAR(r[2], -1.0, 1e-10);
}

TEST(Eigenvalues, PropertyTraceDeterminantAndConjugateClosure) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 10;
    const Matrix a = oracle::random_matrix(rng, n, n);
    const Spectrum s = eigenvalues(a);
    ASSERT_EQ(static_cast<int>(s.size()), n);
    std::complex<double> sum = 0.0, prod = 1.0;
    for (const auto& z : s) {
      sum += z;
      prod *= z;
    }
    EXPECT_NEAR(sum.real(), a.trace(), 1e-9 * (1 + std::abs(a.trace())));
    EXPECT_NEAR(sum.imag(), 0.0, 1e-9);
    EXPECT_NEAR(prod.real(), a.determinant(), 1e-8 * (1 + std::abs(a.determinant())));
    for (const auto& z : s) {
      if (std::abs(z.imag()) < 1e-12) continue;
      const double gap = std::ranges::min(s | std::views::transform([&](auto w) {
                                            return std::abs(w - std::conj(z));
                                          }));
      EXPECT_LT(gap, 1e-9);
    }
  }
}

TEST(Eigenvalues, BadlyScaledMatrixUsesBalancing) {
  Matrix a = (Matrix(3, 3) << -1, 1e6, 0, 0, -2, 1e6, 0, 0, -3).finished();
  a(2, 0) = 1e-30;  // cycle product 1e-18: eigenvalues stay on the diagonal
  const auto r = sorted_real(eigenvalues(a));
  EXPECT_NEAR(r[0], -3.0, 1e-6);
  EXPECT_NEAR(r[1], -2.0, 1e-6);
  EXPECT_NEAR(r[2], -1.0, 1e-6);
  const Vector d = balancing_scale(a);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double e = std::log2(d(i));
    EXPECT_DOUBLE_EQ(e, std::round(e));  // powers of two keep the similarity exact
  }
}

TEST(Controllability, Examples) {
  const Matrix e0 = (Matrix(2, 1) << 1, 0).finished();
  EXPECT_TRUE(controllability_matrix(Matrix::Zero(2, 2), e0)
                  .isApprox((Matrix(2, 2) << 1, 0, 0, 0).finished()));
  const Matrix a = (Matrix(2, 2) << 0, 1, 0, 0).finished();
  const Matrix b = (Matrix(2, 1) << 0, 1).finished();
  EXPECT_TRUE(controllability_matrix(a, b).isApprox((Matrix(2, 2) << 0, 1, 1, 0).finished()));
  const Matrix c = controllability_matrix(Matrix::Identity(2, 2), Matrix::Ones(2, 1));
  EXPECT_TRUE(c.isApprox(Matrix::Ones(2, 2)));
  EXPECT_EQ(numerical_rank(c).rank, 1);
}

TEST(Controllability, QuadruplePendulumHasFullRank) {
  const PlantParams p = quadruple_pendulum_params();
  const StateSpace ss = linearize(p, find_equilibrium(p, Equilibrium::kUpright));
  const RankEstimate r = numerical_rank(controllability_matrix(ss.a, ss.b));
  EXPECT_EQ(r.rank, 10);
  EXPECT_GT(r.sigma_ratio, 0.0);
}

TEST(SpectrumMismatch, PairsIrrespectiveOfOrder) {
  const Spectrum want{{-1, 2}, {-1, -2}, {-5, 0}};
  const Spectrum got{{-5, 0}, {-1, -2}, {-1, 2}};
  EXPECT_DOUBLE_EQ(spectrum_mismatch(got, want), 0.0);
  const Spectrum off{{-5.5, 0}, {-1, -2}, {-1, 2}};
  EXPECT_NEAR(spectrum_mismatch(off, want), 0.1, 1e-15);
}

TEST(Csv, RoundTripIsExact) {
  std::mt19937_64 rng(13);
  const Matrix a = oracle::random_matrix(rng, 4, 3, 1e3);
  EXPECT_EQ(from_csv(to_csv(a)), a);
}

TEST(Csv, DiagnosesMalformedInput) {
  EXPECT_THROW(from_csv("1,2\n3\n"), InvalidArgument);
  EXPECT_THROW(from_csv("1,abc\n"), InvalidArgument);
  try {
    from_csv("1,2\n3,x\n");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}
