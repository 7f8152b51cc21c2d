#ifndef NGPP_TESTS_SUPPORT_HPP
#define NGPP_TESTS_SUPPORT_HPP

// Helpers and brute-force oracles shared by the test binaries. Nothing here
// calls the library routine it is used to check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "ngpp/ngpp.hpp"

namespace ngpp::testing {

inline Matrix random_spd(Index p, Rng& rng, double ridge = 0.1) {
  const Matrix a = standard_normal(p, p, rng);
  return a * a.transpose() + ridge * Matrix::Identity(p, p);
}

inline Matrix random_nonsingular(Index p, Rng& rng) {
  // Singular values kept inside [0.3, 3] so conditioning stays moderate.
  Matrix u = random_orthogonal(p, rng);
  Matrix v = random_orthogonal(p, rng);
  std::uniform_real_distribution<double> s(0.3, 3.0);
  Vector sv(p);
  for (Index i = 0; i < p; ++i) sv(i) = s(rng);
  return u * sv.asDiagonal() * v.transpose();
}

/// Sample rescaled so that its 1/n covariance is exactly the identity.
inline Matrix exactly_white(Matrix x) {
  const Index n = x.rows();
  x.rowwise() -= x.colwise().mean();
  const Matrix cov = x.transpose() * x / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const Matrix g = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                   es.eigenvectors().transpose();
  return x * g;
}

/// Exhaustive minimum over assignments.
inline double brute_force_assignment(const Matrix& cost) {
  std::vector<Index> perm(static_cast<std::size_t>(cost.rows()));
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (Index k = 0; k < cost.rows(); ++k) c += cost(k, perm[static_cast<std::size_t>(k)]);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// MDI by search over all row matchings, the scale of each row found by a
/// one-variable least-squares fit and the residual evaluated explicitly.
inline double brute_force_mdi(const Matrix& w_hat, const Matrix& omega) {
  const Matrix g = w_hat * omega;
  const Index d = g.rows();
  const Index p = g.cols();
  std::vector<Index> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Index k = 0; k < d; ++k) {
      Vector target = Vector::Zero(p);
      target(perm[static_cast<std::size_t>(k)]) = 1.0;
      const Matrix a = g.row(k).transpose();
      const double c = a.colPivHouseholderQr().solve(target)(0);
      total += (c * g.row(k).transpose() - target).squaredNorm();
    }
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best / static_cast<double>(d));
}

/// alpha m3(v)^2 + (1 - alpha)(m4(v) - 3)^2 for unconstrained v on
/// whitened rows, with plain sums.
inline double raw_polynomial_objective(const Vector& v, const Matrix& rows, double alpha) {
  const Vector y = rows * v;
  double m3 = 0.0, m4 = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    m3 += y(i) * y(i) * y(i);
    m4 += y(i) * y(i) * y(i) * y(i);
  }
  m3 /= static_cast<double>(y.size());
  m4 /= static_cast<double>(y.size());
  return alpha * m3 * m3 + (1.0 - alpha) * (m4 - 3.0) * (m4 - 3.0);
}

inline Vector central_difference(const Vector& v, const Matrix& rows, double alpha, double h) {
  Vector g(v.size());
  for (Index j = 0; j < v.size(); ++j) {
    Vector up = v, dn = v;
    up(j) += h;
    dn(j) -= h;
    g(j) = (raw_polynomial_objective(up, rows, alpha) - raw_polynomial_objective(dn, rows, alpha)) / (2.0 * h);
  }
  return g;
}

/// Largest deviation between the columns of a and b after matching every
/// column of a to one column of b up to sign.
inline double matched_column_deviation(const Matrix& a, const Matrix& b) {
  const Index d = a.cols();
  std::vector<Index> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (Index k = 0; k < d; ++k) {
      const auto other = b.col(perm[static_cast<std::size_t>(k)]);
      const double dev = std::min((a.col(k) - other).cwiseAbs().maxCoeff(), (a.col(k) + other).cwiseAbs().maxCoeff());
      worst = std::max(worst, dev);
    }
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double correlation(const Vector& a, const Vector& b) {
  const Vector ca = a.array() - a.mean();
  const Vector cb = b.array() - b.mean();
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

inline WhitenedSample white_sample(const Matrix& rows) {
  WhitenedSample s;
  s.rows = rows;
  s.mean = Vector::Zero(rows.cols());
  s.whitener = Matrix::Identity(rows.cols(), rows.cols());
  return s;
}

/// Latent sample of independent standardized columns, pre-whitened.
inline WhitenedSample white_latent(const std::vector<Family>& families, Index n, std::uint64_t seed) {
  Matrix z(n, static_cast<Index>(families.size()));
  for (std::size_t j = 0; j < families.size(); ++j) {
    Rng rng = make_rng(seed, {0x7e57, j});
    z.col(static_cast<Index>(j)) = draw_family(families[j], n, rng);
  }
  return whiten_rows(z);
}

}  // namespace ngpp::testing

#endif  // NGPP_TESTS_SUPPORT_HPP
