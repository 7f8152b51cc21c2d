#ifndef NGPP_EVALUATION_HPP
#define NGPP_EVALUATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <sstream>
#include <vector>

#include "ngpp/estimators.hpp"
#include "ngpp/numcore.hpp"
#include "ngpp/objective.hpp"
#include "ngpp/parallel.hpp"
#include "ngpp/random.hpp"

namespace ngpp {

struct MdiResult {
  double value = 0.0;
  std::vector<Index> permutation;  // row k of W_hat matched to target row permutation[k]
  Vector scales;                   // signed optimal scale of each row of W_hat
  Matrix gain;                     // W_hat * Omega
};

namespace detail {

inline void require_full_row_rank(const Matrix& w, const char* what) {
  if (w.rows() == 0 || w.rows() > w.cols()) {
    throw Error(ErrorKind::dimension_mismatch, std::string(what) + " must have 1 <= rows <= columns");
  }
  const SymEig eig = sym_eig(w * w.transpose());
  const double lmax = eig.values(0);
  const double lmin = eig.values(eig.values.size() - 1);
  if (!(lmax > 0.0) || !(lmin > 1e-12 * lmax)) {
    std::ostringstream os;
    os << what << " is rank deficient (smallest Gram eigenvalue " << lmin << ", largest " << lmax << ")";
    throw Error(ErrorKind::rank_deficiency, os.str());
  }
}

}  // namespace detail

/// Minimum distance index for a d x p unmixing estimate:
/// D = d^{-1/2} inf over C = J D P of |C W_hat Omega - (I_d, 0)|_F.
///
/// Sign and scale act row by row, so for a fixed matching sigma the optimal
/// signed scale of row k is g_{k,sigma(k)} / |g_k|^2 and leaves residual
/// 1 - g_{k,sigma(k)}^2 / |g_k|^2; the matching is then a d x d assignment on
/// the first d columns of G = W_hat Omega.
inline MdiResult mdi(const Matrix& w_hat, const Matrix& omega) {
  if (omega.rows() != omega.cols() || omega.rows() != w_hat.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "Omega must be p x p with p the column count of W_hat");
  }
  detail::require_full_row_rank(w_hat, "W_hat");
  MdiResult r;
  r.gain = w_hat * omega;
  const Index d = r.gain.rows();
  const Vector norms2 = r.gain.rowwise().squaredNorm();
  if ((norms2.array() <= 0.0).any()) throw Error(ErrorKind::rank_deficiency, "W_hat Omega has a zero row");
  Matrix cost(d, d);
  for (Index k = 0; k < d; ++k)
    for (Index j = 0; j < d; ++j) cost(k, j) = -r.gain(k, j) * r.gain(k, j) / norms2(k);
  r.permutation = solve_assignment(cost);
  r.scales.resize(d);
  double sq = 0.0;
  for (Index k = 0; k < d; ++k) {
    const double g = r.gain(k, r.permutation[static_cast<std::size_t>(k)]);
    r.scales(k) = g / norms2(k);
    sq += std::max(0.0, 1.0 - g * g / norms2(k));
  }
  r.value = std::min(1.0, std::sqrt(sq / static_cast<double>(d)));
  return r;
}

/// Orthogonal projection W^T (W W^T)^{-1} W onto the row space of W.
inline Matrix projection_matrix(const Matrix& w) {
  detail::require_full_row_rank(w, "W");
  const Matrix gram = w * w.transpose();
  const Matrix p = w.transpose() * gram.ldlt().solve(w);
  return 0.5 * (p + p.transpose());
}

/// Frobenius distance of P_hat from diag(I_d, 0).
inline double subspace_error(const Matrix& p_hat, Index d) {
  if (p_hat.rows() != p_hat.cols() || d < 0 || d > p_hat.rows()) {
    throw Error(ErrorKind::dimension_mismatch, "P_hat must be square with d <= p");
  }
  Matrix target = Matrix::Zero(p_hat.rows(), p_hat.cols());
  target.topLeftCorner(d, d).setIdentity();
  return (p_hat - target).norm();
}

inline double jarque_bera(std::span<const double> sample) {
  const Cumulants c = standardized_cumulants(sample);
  return c.gamma * c.gamma / 6.0 + c.kappa * c.kappa / 24.0;
}

inline double jarque_bera(const Vector& sample) {
  return jarque_bera(std::span<const double>(sample.data(), static_cast<std::size_t>(sample.size())));
}

/// Objective values of a full deflation fit (d = p), sorted decreasingly.
inline Vector screeplot_values(const DataMatrix& x, const Weights& w, const FitOptions& opts = {}) {
  const SeparationEstimate est = deflation_fit(x, x.p(), w, opts);
  Vector g = est.rotation.per_row_objective;
  std::sort(g.data(), g.data() + g.size(), std::greater<>());
  return g;
}

struct DimensionReport {
  std::vector<Index> tested_k;
  std::vector<double> observed_g;
  std::vector<std::vector<double>> null_samples;
  std::vector<double> rho;
  Index decision = 0;
  double level = 0.05;
  int null_count = 0;
  int redraws = 0;           // null replicates redrawn after a failed fit
  int unresolved = 0;        // replicates still failing after all redraws (kept as is)
  bool observed_converged = true;
};

struct DimensionOptions {
  double level = 0.05;
  int null_count = 200;
  std::uint64_t seed = 0;
  FitOptions fit;
  unsigned threads = 1;
  int max_redraws = 5;
};

namespace detail {

struct NullDraw {
  double g = 0.0;
  int redraws = 0;
  bool resolved = true;
};

// First deflation objective of a standard normal n x q sample, fitted with the
// same options as the observed data.
inline NullDraw null_replicate(Index n, Index q, const Weights& w, const DimensionOptions& o, std::uint64_t k,
                               std::uint64_t j) {
  NullDraw out;
  for (int attempt = 0;; ++attempt) {
    Rng rng = make_rng(o.seed, {0x4e55, k, j, static_cast<std::uint64_t>(attempt)});
    const Matrix y = standard_normal(n, q, rng);
    FitOptions fo = o.fit;
    fo.seed = stream_seed(o.seed, {0x4e56, k, j, static_cast<std::uint64_t>(attempt)});
    const SeparationEstimate est = fit_whitened(whiten_rows(y), Method::deflation, 1, w, fo);
    out.g = est.rotation.per_row_objective(0);
    if (est.converged()) return out;
    if (attempt >= o.max_redraws) {
      out.resolved = false;
      return out;
    }
    ++out.redraws;
  }
}

}  // namespace detail

/// Sequential Monte-Carlo test for the signal dimension. Step k compares the
/// k-th deflation objective of X with N first-direction objectives from
/// standard normal samples of dimension p - k + 1 and stops at the first k
/// whose exceedance proportion falls below 1 - level, returning k - 1.
inline DimensionReport estimate_dimension(const DataMatrix& x, const Weights& w, const DimensionOptions& o) {
  if (!(o.level > 0.0 && o.level < 1.0)) throw Error(ErrorKind::invalid_argument, "level must lie in (0, 1)");
  if (o.null_count < 20) throw Error(ErrorKind::invalid_argument, "need at least 20 null samples");
  o.fit.validate();
  const Index n = x.n();
  const Index p = x.p();
  const SeparationEstimate observed = deflation_fit(x, p, w, o.fit);

  DimensionReport report;
  report.level = o.level;
  report.null_count = o.null_count;
  report.decision = p;
  report.observed_converged = observed.converged();
  for (Index k = 1; k <= p; ++k) {
    const double g_obs = observed.rotation.per_row_objective(k - 1);
    const Index q = p - k + 1;
    std::vector<detail::NullDraw> draws(static_cast<std::size_t>(o.null_count));
    parallel_for(draws.size(), o.threads, [&](std::size_t j) {
      draws[j] = detail::null_replicate(n, q, w, o, static_cast<std::uint64_t>(k), j);
    });
    std::vector<double> nulls;
    nulls.reserve(draws.size());
    int exceed = 0;
    for (const auto& dr : draws) {
      nulls.push_back(dr.g);
      report.redraws += dr.redraws;
      report.unresolved += dr.resolved ? 0 : 1;
      if (g_obs > dr.g) ++exceed;
    }
    const double rho = static_cast<double>(exceed) / static_cast<double>(o.null_count);
    report.tested_k.push_back(k);
    report.observed_g.push_back(g_obs);
    report.null_samples.push_back(std::move(nulls));
    report.rho.push_back(rho);
    if (rho < 1.0 - o.level) {
      report.decision = k - 1;
      break;
    }
  }
  return report;
}

}  // namespace ngpp

#endif  // NGPP_EVALUATION_HPP
