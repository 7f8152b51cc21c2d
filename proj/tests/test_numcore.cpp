#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "ngpp/numcore.hpp"
#include "ngpp/random.hpp"
#include "support.hpp"

using namespace ngpp;
using ngpp::testing::brute_force_assignment;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

void expect_kind(ErrorKind kind, const std::function<void()>& f) {
  try {
    f();
    FAIL() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

}  // namespace

TEST(SymEig, IdentityHasUnitEigenvalues) {
  const SymEig e = sym_eig(Matrix::Identity(3, 3));
  EXPECT_TRUE(e.values.isApprox(Vector::Ones(3), 1e-14));
  EXPECT_LE((e.vectors.transpose() * e.vectors - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SymEig, DiagonalIsAxisAligned) {
  const SymEig e = sym_eig(mat2(1, 0, 0, 4));
  EXPECT_DOUBLE_EQ(e.values(0), 4.0);
  EXPECT_DOUBLE_EQ(e.values(1), 1.0);
  EXPECT_NEAR(e.vectors(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(e.vectors(0, 1), 1.0, 1e-15);
}

TEST(SymEig, TwoByTwoHandSolution) {
  const SymEig e = sym_eig(mat2(2, 1, 1, 2));
  EXPECT_NEAR(e.values(0), 3.0, 1e-14);
  EXPECT_NEAR(e.values(1), 1.0, 1e-14);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), r, 1e-14);
  EXPECT_NEAR(e.vectors(0, 0), e.vectors(1, 0), 1e-14);
  EXPECT_NEAR(e.vectors(0, 1), -e.vectors(1, 1), 1e-14);
}

TEST(SymEig, SignConventionLargestEntryPositive) {
  Rng rng = make_rng(11, {});
  for (int t = 0; t < 50; ++t) {
    const SymEig e = sym_eig(ngpp::testing::random_spd(5, rng));
    for (Index j = 0; j < 5; ++j) {
      Index arg = 0;
      e.vectors.col(j).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(e.vectors(arg, j), 0.0);
    }
    for (Index j = 1; j < 5; ++j) EXPECT_GE(e.values(j - 1), e.values(j));
  }
}

TEST(SymEig, RejectsAsymmetricInput) {
  expect_kind(ErrorKind::symmetry_violation, [] { sym_eig(mat2(1, 2, 0, 1)); });
}

TEST(InvSqrtSym, Identity) {
  EXPECT_LE((inv_sqrt_sym(Matrix::Identity(4, 4)) - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(InvSqrtSym, Diagonal) {
  const Matrix g = inv_sqrt_sym(mat2(4, 0, 0, 9));
  EXPECT_LE((g - mat2(0.5, 0, 0, 1.0 / 3.0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(InvSqrtSym, TwoByTwoHandSolution) {
  // Eigenvalues 3 and 1 with unnormalized eigenvectors (1,1) and (1,-1).
  const double s = 1.0 / std::sqrt(3.0);
  const Matrix expected = 0.5 * mat2(s + 1.0, s - 1.0, s - 1.0, s + 1.0);
  EXPECT_LE((inv_sqrt_sym(mat2(2, 1, 1, 2)) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(InvSqrtSym, NearSingularIsRankDeficient) {
  expect_kind(ErrorKind::rank_deficiency, [] { inv_sqrt_sym(mat2(1, 1, 1, 1 + 1e-14)); });
  expect_kind(ErrorKind::rank_deficiency, [] { inv_sqrt_sym(mat2(1, 0, 0, -1)); });
}

TEST(InvSqrtSym, RandomSpdProperty) {
  Rng rng = make_rng(12, {});
  std::uniform_int_distribution<int> dim(1, 10);
  for (int t = 0; t < 1000; ++t) {
    const Index p = dim(rng);
    const Matrix s = ngpp::testing::random_spd(p, rng);
    const Matrix g = inv_sqrt_sym(s);
    EXPECT_LE((g * s * g.transpose() - Matrix::Identity(p, p)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((g - g.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Whiten, AlreadyWhiteSampleIsFixed) {
  Rng rng = make_rng(13, {});
  const Matrix z = ngpp::testing::exactly_white(standard_normal(500, 3, rng));
  const Matrix shifted = z.rowwise() + Eigen::RowVector3d(1.0, -2.0, 0.5);
  const WhitenedSample w = whiten(DataMatrix(shifted));
  EXPECT_LE((w.rows - z).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((w.whitener - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Whiten, ScaleEquivariance) {
  Rng rng = make_rng(14, {});
  const Matrix x = standard_normal(300, 4, rng) * ngpp::testing::random_spd(4, rng);
  const WhitenedSample a = whiten(DataMatrix(x));
  const WhitenedSample b = whiten(DataMatrix(5.0 * x));
  EXPECT_LE((a.rows - b.rows).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Whiten, GivenCovarianceBecomesIdentity) {
  Rng rng = make_rng(15, {});
  const Matrix z = ngpp::testing::exactly_white(standard_normal(400, 2, rng));
  const SymEig e = sym_eig(mat2(2, 1, 1, 2));
  const Matrix root = e.vectors * e.values.cwiseSqrt().asDiagonal() * e.vectors.transpose();
  const Matrix x = z * root;
  const Matrix centered = x.rowwise() - x.colwise().mean();
  EXPECT_LE((centered.transpose() * centered / 400.0 - mat2(2, 1, 1, 2)).cwiseAbs().maxCoeff(), 1e-12);
  const WhitenedSample w = whiten(DataMatrix(x));
  EXPECT_LE((w.rows.transpose() * w.rows / 400.0 - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Whiten, RankDeficientData) {
  Rng rng = make_rng(16, {});
  Matrix x = standard_normal(100, 3, rng);
  x.col(2) = 2.0 * x.col(0) - x.col(1);
  expect_kind(ErrorKind::rank_deficiency, [&] { whiten(DataMatrix(x)); });
}

TEST(Whiten, IdempotentUpToRotation) {
  Rng rng = make_rng(17, {});
  for (int t = 0; t < 20; ++t) {
    const Matrix x = standard_normal(200, 5, rng) * ngpp::testing::random_nonsingular(5, rng);
    const WhitenedSample once = whiten(DataMatrix(x));
    const WhitenedSample twice = whiten_rows(once.rows);
    EXPECT_LE((twice.whitener - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(DataMatrixTest, ValidatesShapeAndValues) {
  expect_kind(ErrorKind::dimension_mismatch, [] { DataMatrix(Matrix::Zero(10, 1)); });
  expect_kind(ErrorKind::dimension_mismatch, [] { DataMatrix(Matrix::Zero(3, 3)); });
  Matrix bad = Matrix::Zero(10, 2);
  bad(3, 1) = std::nan("");
  expect_kind(ErrorKind::invalid_argument, [&] { DataMatrix{bad}; });
}

TEST(Cumulants, TwoPointLaw) {
  std::vector<double> x;
  for (int i = 0; i < 500; ++i) {
    x.push_back(-1.0);
    x.push_back(1.0);
  }
  const Cumulants c = standardized_cumulants(x);
  EXPECT_NEAR(c.gamma, 0.0, 1e-15);
  EXPECT_NEAR(c.kappa, -2.0, 1e-14);
}

TEST(Cumulants, GaussianNearZero) {
  Rng rng = make_rng(18, {});
  const Index n = 200000;
  const Vector x = standard_normal(n, 1, rng);
  const Cumulants c = standardized_cumulants(x);
  EXPECT_NEAR(c.gamma, 0.0, 5.0 * std::sqrt(6.0 / n));
  EXPECT_NEAR(c.kappa, 0.0, 5.0 * std::sqrt(24.0 / n));
}

TEST(Cumulants, ExponentialApproachesTwoAndSix) {
  Rng rng = make_rng(19, {});
  std::exponential_distribution<double> e(1.0);
  std::vector<double> x(1000000);
  for (double& v : x) v = e(rng);
  const Cumulants c = standardized_cumulants(x);
  // Standard errors are about 0.016 and 0.12 at this size.
  EXPECT_NEAR(c.gamma, 2.0, 0.08);
  EXPECT_NEAR(c.kappa, 6.0, 0.6);
}

TEST(Cumulants, ZeroVarianceIsDegenerate) {
  const std::vector<double> x(10, 3.25);
  expect_kind(ErrorKind::degenerate_sample, [&] { standardized_cumulants(x); });
  expect_kind(ErrorKind::degenerate_sample, [] { standardized_cumulants(std::vector<double>{1.0}); });
}

TEST(Cumulants, AffineInvariance) {
  Rng rng = make_rng(20, {});
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  for (int t = 0; t < 100; ++t) {
    Vector x(300);
    for (Index i = 0; i < x.size(); ++i) x(i) = e(rng);
    double a = coef(rng);
    if (std::abs(a) < 0.1) a = 0.1;
    const double b = coef(rng);
    const Vector y = (a * x).array() + b;
    const Cumulants cx = standardized_cumulants(x);
    const Cumulants cy = standardized_cumulants(y);
    EXPECT_NEAR(cy.gamma, a > 0 ? cx.gamma : -cx.gamma, 1e-12);
    EXPECT_NEAR(cy.kappa, cx.kappa, 1e-12);
  }
}

TEST(Assignment, IdentityFavoring) {
  const Matrix cost = Matrix::Ones(4, 4) - Matrix::Identity(4, 4);
  const auto a = solve_assignment(cost);
  for (Index k = 0; k < 4; ++k) EXPECT_EQ(a[static_cast<std::size_t>(k)], k);
}

TEST(Assignment, Swap) {
  const auto a = solve_assignment(mat2(1, 0, 0, 1));
  EXPECT_EQ(a[0], 1);
  EXPECT_EQ(a[1], 0);
}

TEST(Assignment, MatchesBruteForce) {
  Rng rng = make_rng(21, {});
  std::uniform_int_distribution<int> dim(1, 5);
  std::normal_distribution<double> g;
  for (int t = 0; t < 200; ++t) {
    const Index d = t == 0 ? 4 : dim(rng);
    Matrix cost(d, d);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j) cost(i, j) = g(rng);
    const auto a = solve_assignment(cost);
    std::vector<bool> seen(static_cast<std::size_t>(d), false);
    double total = 0.0;
    for (Index k = 0; k < d; ++k) {
      const Index j = a[static_cast<std::size_t>(k)];
      ASSERT_FALSE(seen[static_cast<std::size_t>(j)]);
      seen[static_cast<std::size_t>(j)] = true;
      total += cost(k, j);
    }
    EXPECT_NEAR(total, brute_force_assignment(cost), 1e-12);
  }
}

TEST(Assignment, RejectsBadInput) {
  expect_kind(ErrorKind::dimension_mismatch, [] { solve_assignment(Matrix::Zero(2, 3)); });
  expect_kind(ErrorKind::invalid_argument, [] { solve_assignment(mat2(0, std::nan(""), 1, 0)); });
}

TEST(OrthonormalizeRows, ProducesOrthonormalRows) {
  Rng rng = make_rng(22, {});
  const Matrix m = standard_normal(3, 6, rng);
  const Matrix u = orthonormalize_rows(m);
  EXPECT_LE((u * u.transpose() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-13);
}
