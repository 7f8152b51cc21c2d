#ifndef NGPP_NUMCORE_HPP
#define NGPP_NUMCORE_HPP

// Dense numeric substrate: symmetric eigendecomposition, symmetric inverse
// square root, whitening, sample cumulants and a linear assignment solver.
//
// Covariances use the 1/n divisor throughout.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

#include "ngpp/error.hpp"

namespace ngpp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Raw n x p observation matrix, one observation per row.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.cols() < 2) {
      throw Error(ErrorKind::dimension_mismatch, "data must have at least 2 columns");
    }
    if (values_.rows() < values_.cols() + 1) {
      std::ostringstream os;
      os << "need n >= p + 1 observations, got n = " << values_.rows() << ", p = " << values_.cols();
      throw Error(ErrorKind::dimension_mismatch, os.str());
    }
    if (!values_.allFinite()) {
      throw Error(ErrorKind::invalid_argument, "data contains non-finite entries");
    }
  }

  Index n() const noexcept { return values_.rows(); }
  Index p() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }

 private:
  Matrix values_;
};

/// Centered and whitened observations together with the mean and the
/// symmetric whitener Sigma^{-1/2} that produced them.
struct WhitenedSample {
  Matrix rows;      // n x p
  Vector mean;      // p
  Matrix whitener;  // p x p, symmetric

  Index n() const noexcept { return rows.rows(); }
  Index p() const noexcept { return rows.cols(); }
};

struct SymEig {
  Vector values;   // non-increasing
  Matrix vectors;  // orthonormal columns, vectors.col(i) pairs with values(i)
};

namespace detail {

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Flip v so that its largest-magnitude entry is positive. Near-ties in
// magnitude resolve to the lowest index.
template <typename Derived>
void canonical_sign(Eigen::MatrixBase<Derived>&& v) {
  const double big = v.cwiseAbs().maxCoeff();
  if (big == 0.0) return;
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= big * (1.0 - 1e-10)) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

inline Matrix sample_covariance(const Matrix& centered) {
  return (centered.transpose() * centered) / static_cast<double>(centered.rows());
}

}  // namespace detail

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// non-increasing order and every eigenvector flipped so its largest-magnitude
/// entry is positive.
inline SymEig sym_eig(const Matrix& s, double symmetry_tol = 1e-10) {
  if (s.rows() != s.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "sym_eig needs a square matrix");
  }
  if (!s.allFinite()) {
    throw Error(ErrorKind::invalid_argument, "sym_eig input has non-finite entries");
  }
  const double scale = detail::max_abs(s);
  const double asym = detail::max_abs(s - s.transpose());
  if (asym > symmetry_tol * std::max(scale, std::numeric_limits<double>::min())) {
    std::ostringstream os;
    os << "matrix is not symmetric (max |S - S^T| = " << asym << ", scale " << scale << ")";
    throw Error(ErrorKind::symmetry_violation, os.str());
  }
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "symmetric eigensolver did not converge within " << 30 * s.rows() << " iterations";
    throw Error(ErrorKind::numeric_failure, os.str());
  }
  const Index p = s.rows();
  std::vector<Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Index{0});
  const Vector& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return ev(a) > ev(b); });

  SymEig out{Vector(p), Matrix(p, p)};
  for (Index j = 0; j < p; ++j) {
    out.values(j) = ev(order[static_cast<std::size_t>(j)]);
    out.vectors.col(j) = solver.eigenvectors().col(order[static_cast<std::size_t>(j)]);
    detail::canonical_sign(out.vectors.col(j));
  }
  return out;
}

/// Unique symmetric G with G S G^T = I. Rejects S whose smallest eigenvalue is
/// not above `rel_eps` times the largest.
inline Matrix inv_sqrt_sym(const Matrix& s, double rel_eps = 1e-12) {
  const SymEig eig = sym_eig(s);
  const double lmax = eig.values(0);
  const double lmin = eig.values(eig.values.size() - 1);
  if (!(lmax > 0.0) || !(lmin > rel_eps * lmax)) {
    std::ostringstream os;
    os << "matrix is not positive definite enough: smallest eigenvalue " << lmin
       << " vs largest " << lmax;
    throw Error(ErrorKind::rank_deficiency, os.str());
  }
  const Vector scale = eig.values.array().rsqrt().matrix();
  Matrix g = eig.vectors * scale.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (g + g.transpose());
}

/// Whitening of an arbitrary n x p matrix (p >= 1). Used directly for the
/// low-dimensional null samples of the dimension test.
inline WhitenedSample whiten_rows(const Matrix& x) {
  if (x.rows() < x.cols() + 1 || x.cols() < 1) {
    throw Error(ErrorKind::dimension_mismatch, "whitening needs n >= p + 1 and p >= 1");
  }
  WhitenedSample out;
  out.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - out.mean.transpose();
  out.whitener = inv_sqrt_sym(detail::sample_covariance(centered));
  out.rows = centered * out.whitener;
  return out;
}

inline WhitenedSample whiten(const DataMatrix& x) { return whiten_rows(x.values()); }

struct Cumulants {
  double gamma = 0.0;  // skewness
  double kappa = 0.0;  // excess kurtosis
};

/// Third and fourth cumulants of the empirically standardized sample (biased
/// variance).
inline Cumulants standardized_cumulants(std::span<const double> sample) {
  if (sample.size() < 2) {
    throw Error(ErrorKind::degenerate_sample, "need at least two observations");
  }
  const double n = static_cast<double>(sample.size());
  CompensatedSum s1;
  double big = 0.0;
  for (double v : sample) {
    s1.add(v);
    big = std::max(big, std::abs(v));
  }
  const double mean = s1.value() / n;
  CompensatedSum s2, s3, s4;
  for (double v : sample) {
    const double c = v - mean;
    const double c2 = c * c;
    s2.add(c2);
    s3.add(c2 * c);
    s4.add(c2 * c2);
  }
  const double m2 = s2.value() / n;
  const double floor = 1e-14 * big;
  if (!(m2 > floor * floor) || !std::isfinite(m2)) {
    throw Error(ErrorKind::degenerate_sample, "sample variance is zero");
  }
  return {(s3.value() / n) / (m2 * std::sqrt(m2)), (s4.value() / n) / (m2 * m2) - 3.0};
}

inline Cumulants standardized_cumulants(const Vector& sample) {
  return standardized_cumulants(std::span<const double>(sample.data(), static_cast<std::size_t>(sample.size())));
}

/// Minimum-cost perfect matching on a square cost matrix. Entry i of the
/// result is the column assigned to row i.
inline std::vector<Index> solve_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "assignment cost must be square");
  }
  if (!cost.allFinite()) {
    throw Error(ErrorKind::invalid_argument, "assignment cost has non-finite entries");
  }
  // Shortest augmenting path with row/column potentials, 1-based internally.
  const Index d = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(d + 1), 0.0), v(static_cast<std::size_t>(d + 1), 0.0);
  std::vector<Index> match(static_cast<std::size_t>(d + 1), 0), way(static_cast<std::size_t>(d + 1), 0);
  for (Index i = 1; i <= d; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(d + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(d + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = match[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= d; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[sj];
        if (cur < minv[sj]) {
          minv[sj] = cur;
          way[sj] = j0;
        }
        if (minv[sj] < delta) {
          delta = minv[sj];
          j1 = j;
        }
      }
      for (Index j = 0; j <= d; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) {
          u[static_cast<std::size_t>(match[sj])] += delta;
          v[sj] -= delta;
        } else {
          minv[sj] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> assignment(static_cast<std::size_t>(d), 0);
  for (Index j = 1; j <= d; ++j) {
    assignment[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
  }
  return assignment;
}

/// Symmetric orthonormalization (M M^T)^{-1/2} M of the rows of M.
inline Matrix orthonormalize_rows(const Matrix& m) { return inv_sqrt_sym(m * m.transpose()) * m; }

}  // namespace ngpp

#endif  // NGPP_NUMCORE_HPP
