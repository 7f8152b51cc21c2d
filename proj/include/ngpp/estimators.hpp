#ifndef NGPP_ESTIMATORS_HPP
#define NGPP_ESTIMATORS_HPP

// Deflation-based and symmetric projection pursuit on the whitened data,
// started from FOBI directions ordered by the projection index.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

#include "ngpp/numcore.hpp"
#include "ngpp/objective.hpp"
#include "ngpp/random.hpp"

namespace ngpp {

enum class Method { deflation, symmetric };

inline const char* to_string(Method m) { return m == Method::deflation ? "deflation" : "symmetric"; }

struct FitOptions {
  double tol = 1e-9;
  int max_iter = 1000;
  GradientVariant gradient = GradientVariant::stabilized;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(tol > 0.0)) throw Error(ErrorKind::invalid_argument, "tol must be positive");
    if (max_iter < 1) throw Error(ErrorKind::invalid_argument, "max_iter must be at least 1");
  }
};

struct RowDiagnostics {
  int iterations = 0;
  double final_step = 0.0;
  bool converged = false;
  int restarts = 0;  // deflation: fresh random starts; symmetric: random perturbations
};

/// U with orthonormal rows (d x p) acting on whitened data.
struct RotationEstimate {
  Matrix u;
  Vector per_row_objective;
};

struct SeparationEstimate {
  Matrix w;  // d x p, equals rotation.u * whitener
  RotationEstimate rotation;
  Weights weights;
  Method method = Method::deflation;
  Vector mean;
  Matrix whitener;
  std::vector<RowDiagnostics> diagnostics;
  std::vector<bool> near_noise;
  bool init_fallback = false;

  Index d() const noexcept { return w.rows(); }
  Index p() const noexcept { return w.cols(); }
  bool converged() const {
    return std::all_of(diagnostics.begin(), diagnostics.end(), [](const RowDiagnostics& r) { return r.converged; });
  }
};

/// Rows are the eigenvectors of (1/n) sum_i |x_i|^2 x_i x_i^T in order of
/// decreasing eigenvalue.
inline Matrix fobi_rotation(const WhitenedSample& data) {
  const Vector r2 = data.rows.rowwise().squaredNorm();
  const Matrix b = data.rows.transpose() * r2.asDiagonal() * data.rows / static_cast<double>(data.n());
  return sym_eig(0.5 * (b + b.transpose())).vectors.transpose();
}

/// FOBI rows reordered by decreasing projection index; ties keep FOBI order.
inline Matrix order_by_objective(const Matrix& rows, const WhitenedSample& data, const Weights& w, Index d) {
  const Vector g = objective_rows(rows, data, w);
  std::vector<Index> order(static_cast<std::size_t>(rows.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return g(a) > g(b); });
  Matrix out(d, rows.cols());
  for (Index k = 0; k < d; ++k) out.row(k) = rows.row(order[static_cast<std::size_t>(k)]);
  return out;
}

inline Matrix initial_rows(const WhitenedSample& data, const Weights& w, Index d) {
  return order_by_objective(fobi_rotation(data), data, w, d);
}

struct InitialRows {
  Matrix rows;
  bool fallback = false;
};

/// FOBI start, or a seeded random orthogonal start when FOBI is degenerate
/// (eigensolver failure or numerically equal eigenvalues).
inline InitialRows initial_rows_or_random(const WhitenedSample& data, const Weights& w, Index d, std::uint64_t seed) {
  try {
    const Vector r2 = data.rows.rowwise().squaredNorm();
    const Matrix b = data.rows.transpose() * r2.asDiagonal() * data.rows / static_cast<double>(data.n());
    const SymEig eig = sym_eig(0.5 * (b + b.transpose()));
    const double spread = eig.values(0) - eig.values(eig.values.size() - 1);
    if (data.p() == 1 || spread > 1e-12 * std::abs(eig.values(0))) {
      return {order_by_objective(eig.vectors.transpose(), data, w, d), false};
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::numeric_failure) throw;
  }
  Rng rng = make_rng(seed, {0xf0b1});
  return {order_by_objective(random_orthogonal(data.p(), rng).transpose(), data, w, d), true};
}

namespace detail {

inline void canonical_row_signs(Matrix& u) {
  for (Index k = 0; k < u.rows(); ++k) canonical_sign(u.row(k));
}

// v minus its components along the first k rows of u (modified Gram-Schmidt).
inline Vector deflate(Vector v, const Matrix& u, Index k) {
  for (Index l = 0; l < k; ++l) v -= u.row(l).dot(v) * u.row(l).transpose();
  return v;
}

inline Vector random_in_complement(const Matrix& u, Index k, Rng& rng) {
  for (;;) {
    Vector v = deflate(random_unit_vector(u.cols(), rng), u, k);
    v = deflate(v, u, k);
    const double norm = v.norm();
    if (norm > 1e-8) return v / norm;
  }
}

// Scale of n * G for a pure-noise projection: n * E[alpha gamma^2 + (1 - alpha)
// kappa^2] = 6 alpha + 24 (1 - alpha) for a fixed direction. Maximizing over a
// p-sphere inflates it; 10 p times that mean is treated as "of order 1/n".
inline double near_noise_threshold(const Weights& w, Index p, Index n) {
  return 10.0 * static_cast<double>(p) * (6.0 * w.alpha() + 24.0 * (1.0 - w.alpha())) / static_cast<double>(n);
}

constexpr double vanishing_update = 1e-13;
constexpr int max_restarts = 10;
constexpr double perturbation_size = 1e-3;

}  // namespace detail

struct RotationFit {
  RotationEstimate rotation;
  std::vector<RowDiagnostics> diagnostics;
};

/// Deflation fixed point on whitened data: row k iterates
/// u <- normalize((I - sum_{l<k} u_l u_l^T) T(u)) with rows 1..k-1 frozen.
inline RotationFit deflation_rotation(const WhitenedSample& data, Index d, const Weights& w, const FitOptions& opts,
                                      const Matrix& init) {
  opts.validate();
  const Index p = data.p();
  if (d < 1 || d > p) throw Error(ErrorKind::invalid_argument, "d must satisfy 1 <= d <= p");
  if (init.rows() < d || init.cols() != p) {
    throw Error(ErrorKind::dimension_mismatch, "initial rows have the wrong shape");
  }
  RotationFit fit;
  Matrix& u = fit.rotation.u;
  u = Matrix::Zero(d, p);
  fit.diagnostics.resize(static_cast<std::size_t>(d));

  for (Index k = 0; k < d; ++k) {
    RowDiagnostics& diag = fit.diagnostics[static_cast<std::size_t>(k)];
    Rng rng = make_rng(opts.seed, {static_cast<std::uint64_t>(k), 0xdef1});
    Vector cur = detail::deflate(init.row(k).transpose(), u, k);
    cur = detail::deflate(cur, u, k);
    cur = cur.norm() > 1e-8 ? Vector(cur / cur.norm()) : detail::random_in_complement(u, k, rng);

    double step = std::numeric_limits<double>::infinity();
    bool failed = false;
    int it = 0;
    while (it < opts.max_iter) {
      ++it;
      Vector next = detail::deflate(gradient(cur, data, w, opts.gradient), u, k);
      next = detail::deflate(next, u, k);
      const double norm = next.norm();
      if (!(norm > detail::vanishing_update)) {
        if (diag.restarts >= detail::max_restarts) {
          failed = true;
          break;
        }
        ++diag.restarts;
        cur = detail::random_in_complement(u, k, rng);
        continue;
      }
      next /= norm;
      step = std::min((next - cur).norm(), (next + cur).norm());
      cur = next;
      if (step <= opts.tol) break;
    }
    diag.iterations = it;
    diag.final_step = step;
    diag.converged = !failed && step <= opts.tol;
    u.row(k) = cur.transpose();
  }
  detail::canonical_row_signs(u);
  fit.rotation.per_row_objective = objective_rows(u, data, w);
  return fit;
}

/// Symmetric fixed point U <- (T T^T)^{-1/2} T with T the stacked gradient
/// rows. Convergence uses the row-wise sign-aligned distance. Output rows are
/// sorted by decreasing objective.
inline RotationFit symmetric_rotation(const WhitenedSample& data, Index d, const Weights& w, const FitOptions& opts,
                                      const Matrix& init) {
  opts.validate();
  const Index p = data.p();
  if (d < 1 || d > p) throw Error(ErrorKind::invalid_argument, "d must satisfy 1 <= d <= p");
  if (init.rows() < d || init.cols() != p) {
    throw Error(ErrorKind::dimension_mismatch, "initial rows have the wrong shape");
  }
  Matrix u = orthonormalize_rows(init.topRows(d));
  Rng rng = make_rng(opts.seed, {0x5e11});
  RowDiagnostics diag;
  double step = std::numeric_limits<double>::infinity();
  bool failed = false;
  int it = 0;
  while (it < opts.max_iter) {
    ++it;
    const Matrix t = gradient_rows(u, data, w, opts.gradient);
    Matrix next;
    try {
      if (!(t.rowwise().norm().minCoeff() > detail::vanishing_update)) {
        throw Error(ErrorKind::rank_deficiency, "gradient row vanished");
      }
      next = orthonormalize_rows(t);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::rank_deficiency) throw;
      if (diag.restarts >= detail::max_restarts) {
        failed = true;
        break;
      }
      ++diag.restarts;
      u = orthonormalize_rows(u + detail::perturbation_size * standard_normal(d, p, rng));
      continue;
    }
    double sq = 0.0;
    for (Index k = 0; k < d; ++k) {
      sq += std::min((next.row(k) - u.row(k)).squaredNorm(), (next.row(k) + u.row(k)).squaredNorm());
    }
    step = std::sqrt(sq);
    u = next;
    if (step <= opts.tol) break;
  }
  diag.iterations = it;
  diag.final_step = step;
  diag.converged = !failed && step <= opts.tol;

  const Vector g = objective_rows(u, data, w);
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return g(a) > g(b); });
  RotationFit fit;
  fit.rotation.u.resize(d, p);
  fit.rotation.per_row_objective.resize(d);
  for (Index k = 0; k < d; ++k) {
    fit.rotation.u.row(k) = u.row(order[static_cast<std::size_t>(k)]);
    fit.rotation.per_row_objective(k) = g(order[static_cast<std::size_t>(k)]);
  }
  detail::canonical_row_signs(fit.rotation.u);
  fit.diagnostics.assign(static_cast<std::size_t>(d), diag);
  return fit;
}

/// Fits on already-whitened data. `initial` (rows in whitened coordinates)
/// overrides the FOBI start.
inline SeparationEstimate fit_whitened(const WhitenedSample& data, Method method, Index d, const Weights& w,
                                       const FitOptions& opts, const std::optional<Matrix>& initial = std::nullopt) {
  if (d < 1 || d > data.p()) {
    std::ostringstream os;
    os << "d must satisfy 1 <= d <= p = " << data.p() << ", got " << d;
    throw Error(ErrorKind::invalid_argument, os.str());
  }
  SeparationEstimate est;
  InitialRows start;
  if (initial) {
    start.rows = *initial;
  } else {
    start = initial_rows_or_random(data, w, method == Method::deflation ? data.p() : d, opts.seed);
  }
  RotationFit fit = method == Method::deflation ? deflation_rotation(data, d, w, opts, start.rows)
                                                : symmetric_rotation(data, d, w, opts, start.rows);
  est.rotation = std::move(fit.rotation);
  est.diagnostics = std::move(fit.diagnostics);
  est.weights = w;
  est.method = method;
  est.mean = data.mean;
  est.whitener = data.whitener;
  est.init_fallback = start.fallback;
  est.w = est.rotation.u * data.whitener;
  const double threshold = detail::near_noise_threshold(w, data.p(), data.n());
  for (Index k = 0; k < d; ++k) est.near_noise.push_back(est.rotation.per_row_objective(k) < threshold);
  return est;
}

inline SeparationEstimate deflation_fit(const DataMatrix& x, Index d, const Weights& w, const FitOptions& opts = {},
                                        const std::optional<Matrix>& initial = std::nullopt) {
  return fit_whitened(whiten(x), Method::deflation, d, w, opts, initial);
}

inline SeparationEstimate symmetric_fit(const DataMatrix& x, Index d, const Weights& w, const FitOptions& opts = {},
                                        const std::optional<Matrix>& initial = std::nullopt) {
  return fit_whitened(whiten(x), Method::symmetric, d, w, opts, initial);
}

inline SeparationEstimate fit(const DataMatrix& x, Method method, Index d, const Weights& w,
                              const FitOptions& opts = {}) {
  return fit_whitened(whiten(x), method, d, w, opts);
}

/// Row i is W (x_i - mean).
inline Matrix signal_scores(const SeparationEstimate& est, const Matrix& x) {
  if (x.cols() != est.p()) {
    std::ostringstream os;
    os << "data has " << x.cols() << " columns but the estimate expects " << est.p();
    throw Error(ErrorKind::dimension_mismatch, os.str());
  }
  return (x.rowwise() - est.mean.transpose()) * est.w.transpose();
}

inline Matrix signal_scores(const SeparationEstimate& est, const DataMatrix& x) {
  return signal_scores(est, x.values());
}

}  // namespace ngpp

#endif  // NGPP_ESTIMATORS_HPP
