#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ngpp/evaluation.hpp"
#include "ngpp/simulation.hpp"
#include "support.hpp"

using namespace ngpp;
using ngpp::testing::brute_force_mdi;

namespace {

// Random member of {J D P}: signs, positive scales in [0.2, 5], permutation.
Matrix random_c(Index d, Rng& rng) {
  std::vector<Index> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::uniform_real_distribution<double> scale(0.2, 5.0);
  Matrix c = Matrix::Zero(d, d);
  for (Index k = 0; k < d; ++k) {
    const double sign = rng() % 2 == 0 ? 1.0 : -1.0;
    c(k, perm[static_cast<std::size_t>(k)]) = sign * scale(rng);
  }
  return c;
}

Matrix leading_identity(Index d, Index p) {
  Matrix w = Matrix::Zero(d, p);
  w.leftCols(d).setIdentity();
  return w;
}

DataMatrix gaussian_data(Index n, Index p, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x9a55});
  return DataMatrix(standard_normal(n, p, rng));
}

ModelSample three_signal_sample(Index n, std::uint64_t seed, std::uint64_t rep = 0) {
  SourceSpec spec;
  spec.signals = {Family::exponential(), Family::uniform(), Family::laplace()};
  spec.noise_dims = 5;
  spec.mixing.kind = Mixing::Kind::random;
  spec.mixing.seed = seed;
  return sample_model(spec, n, seed, rep);
}

}  // namespace

TEST(Mdi, PerfectSeparation) {
  EXPECT_EQ(mdi(leading_identity(3, 5), Matrix::Identity(5, 5)).value, 0.0);
}

TEST(Mdi, ZeroInsideTheEquivalenceClass) {
  Rng rng = make_rng(81, {});
  for (int t = 0; t < 50; ++t) {
    const Index d = 1 + t % 4, p = d + t % 3;
    const Matrix c = random_c(d, rng);
    EXPECT_LE(mdi(c * leading_identity(d, p), Matrix::Identity(p, p)).value, 1e-12);
  }
}

TEST(Mdi, MatchesExhaustiveSearch) {
  Rng rng = make_rng(82, {});
  for (int t = 0; t < 100; ++t) {
    const Matrix w = standard_normal(3, 5, rng);
    const Matrix omega = ngpp::testing::random_nonsingular(5, rng);
    EXPECT_NEAR(mdi(w, omega).value, brute_force_mdi(w, omega), 1e-12);
  }
}

TEST(Mdi, ResultFieldsAreConsistent) {
  Rng rng = make_rng(83, {});
  const Matrix w = standard_normal(3, 4, rng);
  const Matrix omega = ngpp::testing::random_nonsingular(4, rng);
  const MdiResult r = mdi(w, omega);
  Matrix c = Matrix::Zero(3, 3);
  for (Index k = 0; k < 3; ++k) c(r.permutation[static_cast<std::size_t>(k)], k) = r.scales(k);
  const double direct = (c * w * omega - leading_identity(3, 4)).norm() / std::sqrt(3.0);
  EXPECT_NEAR(direct, r.value, 1e-12);
  EXPECT_LE((r.gain - w * omega).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Mdi, InvariantUnderEquivalenceClass) {
  Rng rng = make_rng(84, {});
  const Matrix w = standard_normal(4, 6, rng);
  const Matrix omega = ngpp::testing::random_nonsingular(6, rng);
  const double base = mdi(w, omega).value;
  for (int t = 0; t < 100; ++t) EXPECT_NEAR(mdi(random_c(4, rng) * w, omega).value, base, 1e-12);
}

TEST(Mdi, Bounds) {
  Rng rng = make_rng(85, {});
  for (int t = 0; t < 1000; ++t) {
    const Index d = 1 + t % 4, p = d + t % 4;
    const double v = mdi(standard_normal(d, p, rng), standard_normal(p, p, rng)).value;
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Mdi, RankDeficiency) {
  Matrix w(2, 3);
  w << 1, 2, 3, 2, 4, 6;
  try {
    mdi(w, Matrix::Identity(3, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::rank_deficiency);
  }
  EXPECT_THROW(mdi(Matrix::Identity(2, 3), Matrix::Identity(2, 2)), Error);
}

TEST(Projection, BlockIdentity) {
  Matrix expected = Matrix::Zero(5, 5);
  expected.topLeftCorner(2, 2).setIdentity();
  EXPECT_LE((projection_matrix(leading_identity(2, 5)) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Projection, DependsOnlyOnRowSpace) {
  Rng rng = make_rng(86, {});
  for (int t = 0; t < 50; ++t) {
    const Matrix w = standard_normal(3, 6, rng);
    const Matrix m = ngpp::testing::random_nonsingular(3, rng);
    EXPECT_LE((projection_matrix(m * w) - projection_matrix(w)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Projection, IdempotentSymmetricRankD) {
  Rng rng = make_rng(87, {});
  for (int t = 0; t < 200; ++t) {
    const Index d = 1 + t % 5, p = d + 1 + t % 3;
    const Matrix w = standard_normal(d, p, rng);
    const Matrix proj = projection_matrix(w);
    EXPECT_LE((proj * proj - proj).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((proj - proj.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(proj.trace(), static_cast<double>(d), 1e-10);
  }
}

TEST(SubspaceError, ZeroAtTarget) {
  EXPECT_EQ(subspace_error(projection_matrix(leading_identity(2, 4)), 2), 0.0);
}

TEST(SubspaceError, FirstOrderExpansion) {
  Rng rng = make_rng(88, {});
  for (double size : {1e-3, 1e-4, 1e-5}) {
    Matrix w = leading_identity(2, 5);
    Matrix e = standard_normal(2, 3, rng);
    e *= size / e.norm();
    w.rightCols(3) = e;
    EXPECT_NEAR(subspace_error(projection_matrix(w), 2) / (std::sqrt(2.0) * size), 1.0, 0.1);
  }
}

TEST(SubspaceError, InvariantUnderRowRelabeling) {
  Rng rng = make_rng(89, {});
  const Matrix w = standard_normal(3, 5, rng);
  Matrix swapped = w;
  swapped.row(0) = w.row(2);
  swapped.row(2) = -w.row(0);
  EXPECT_NEAR(subspace_error(projection_matrix(swapped), 3), subspace_error(projection_matrix(w), 3), 1e-12);
}

TEST(JarqueBera, TwoPointSample) {
  std::vector<double> x;
  for (int i = 0; i < 100; ++i) {
    x.push_back(1.0);
    x.push_back(-1.0);
  }
  EXPECT_NEAR(jarque_bera(x), 1.0 / 6.0, 1e-14);
}

TEST(JarqueBera, GaussianNearZero) {
  Rng rng = make_rng(90, {});
  const Index n = 100000;
  // Under normality n * JB is asymptotically chi-square with 2 degrees of freedom.
  EXPECT_LT(static_cast<double>(n) * jarque_bera(Vector(standard_normal(n, 1, rng))), 20.0);
}

TEST(JarqueBera, RatioToIndexIsFiveOverTwentyFour) {
  Rng rng = make_rng(91, {});
  const std::vector<Family> fams{Family::exponential(), Family::uniform(), Family::gamma(3.0), Family::laplace()};
  for (int t = 0; t < 100; ++t) {
    Vector x = draw_family(fams[static_cast<std::size_t>(t % 4)], 50 + t, rng);
    Matrix col = x;
    const WhitenedSample s = whiten_rows(col);
    const double g = g_alpha(Vector::Ones(1), s, Weights(0.8));
    ASSERT_GT(g, 0.0);
    EXPECT_NEAR(jarque_bera(x) / g, 5.0 / 24.0, 1e-12);
  }
}

TEST(Screeplot, PureGaussianValuesAreSmall) {
  const Index n = 4000;
  const Vector v = screeplot_values(gaussian_data(n, 5, 92), Weights(0.8));
  ASSERT_EQ(v.size(), 5);
  for (Index k = 1; k < 5; ++k) EXPECT_GE(v(k - 1), v(k));
  EXPECT_LT(v(0), 100.0 / static_cast<double>(n));
}

TEST(Screeplot, GapAfterThirdValue) {
  for (std::uint64_t seed : {93, 94, 95}) {
    const Vector v = screeplot_values(three_signal_sample(2000, seed).x, Weights(0.8));
    EXPECT_GT(v(2), 5.0 * v(3)) << "seed " << seed << ": " << v.transpose();
  }
}

TEST(Screeplot, InvariantUnderRemixing) {
  Rng rng = make_rng(96, {});
  const ModelSample m = three_signal_sample(2000, 96);
  FitOptions opts;
  opts.tol = 1e-12;
  const Vector a = screeplot_values(m.x, Weights(0.8), opts);
  const DataMatrix remixed(m.x.values() * ngpp::testing::random_nonsingular(8, rng).transpose());
  const Vector b = screeplot_values(remixed, Weights(0.8), opts);
  for (Index k = 0; k < 3; ++k) EXPECT_NEAR(a(k), b(k), 1e-6 * a(k)) << k;
}

TEST(DimensionTest, ValidatesOptions) {
  const DataMatrix x = gaussian_data(100, 3, 97);
  DimensionOptions o;
  o.level = 0.0;
  EXPECT_THROW(estimate_dimension(x, Weights(0.8), o), Error);
  o.level = 1.0;
  EXPECT_THROW(estimate_dimension(x, Weights(0.8), o), Error);
  o.level = 0.05;
  o.null_count = 19;
  EXPECT_THROW(estimate_dimension(x, Weights(0.8), o), Error);
}

TEST(DimensionTest, ReportShapeAndDeterminism) {
  const ModelSample m = three_signal_sample(1000, 98);
  DimensionOptions o;
  o.null_count = 39;
  o.seed = 5;
  const DimensionReport a = estimate_dimension(m.x, Weights(0.8), o);
  o.threads = 3;
  const DimensionReport b = estimate_dimension(m.x, Weights(0.8), o);
  EXPECT_EQ(a.rho, b.rho);
  EXPECT_EQ(a.null_samples, b.null_samples);
  EXPECT_EQ(a.decision, b.decision);
  ASSERT_EQ(a.tested_k.size(), a.rho.size());
  for (std::size_t i = 0; i < a.rho.size(); ++i) {
    EXPECT_EQ(a.tested_k[i], static_cast<Index>(i + 1));
    EXPECT_GE(a.rho[i], 0.0);
    EXPECT_LE(a.rho[i], 1.0);
    EXPECT_EQ(a.null_samples[i].size(), 39u);
  }
  EXPECT_LE(a.decision, 8);
  EXPECT_GE(a.decision, 0);
}

TEST(DimensionTest, NullCalibration) {
  const int runs = 400;
  int rejections = 0;
  for (int r = 0; r < runs; ++r) {
    DimensionOptions o;
    o.null_count = 39;
    o.seed = 1000 + static_cast<std::uint64_t>(r);
    const DimensionReport rep = estimate_dimension(gaussian_data(200, 4, 5000 + r), Weights(0.8), o);
    if (rep.decision >= 1) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / runs;
  const double se = std::sqrt(0.05 * 0.95 / runs);
  EXPECT_LE(std::abs(rate - 0.05), 3.0 * se) << rejections << " of " << runs;
}

TEST(DimensionTest, StrongSingleSignal) {
  SourceSpec spec;
  spec.signals = {Family::exponential()};
  spec.noise_dims = 3;
  spec.mixing.kind = Mixing::Kind::random;
  int correct = 0;
  const int runs = 20;
  for (int r = 0; r < runs; ++r) {
    spec.mixing.seed = static_cast<std::uint64_t>(r);
    const ModelSample m = sample_model(spec, 5000, 77, static_cast<std::uint64_t>(r));
    DimensionOptions o;
    o.null_count = 39;
    o.seed = static_cast<std::uint64_t>(r);
    if (estimate_dimension(m.x, Weights(0.8), o).decision == 1) ++correct;
  }
  EXPECT_GE(correct, 18);
}
