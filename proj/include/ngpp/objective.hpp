#ifndef NGPP_OBJECTIVE_HPP
#define NGPP_OBJECTIVE_HPP

// Projection index G_alpha(u) = alpha * gamma^2 + (1 - alpha) * kappa^2 of the
// projection u^T x_st, and the fixed-point gradients used by the estimators.
//
// grad_t keeps the customary normalization in which the factor 2 of the true
// gradient is dropped: 2 * grad_t(u) is the unconstrained gradient of
// alpha * m3(u)^2 + (1 - alpha) * (m4(u) - 3)^2, m_r(u) the r-th sample
// moment of u^T x_st.

#include <cmath>
#include <sstream>

#include "ngpp/numcore.hpp"

namespace ngpp {

/// Cumulant weighting. alpha1 = 3 alpha and alpha2 = 4 (1 - alpha) are the
/// constants appearing in the gradient and in the asymptotic variances.
class Weights {
 public:
  explicit Weights(double alpha = 0.8) : alpha_(alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      std::ostringstream os;
      os << "alpha must lie in [0, 1], got " << alpha;
      throw Error(ErrorKind::invalid_argument, os.str());
    }
  }
  double alpha() const noexcept { return alpha_; }
  double alpha1() const noexcept { return 3.0 * alpha_; }
  double alpha2() const noexcept { return 4.0 * (1.0 - alpha_); }

 private:
  double alpha_;
};

enum class GradientVariant { plain, stabilized };

namespace detail {

inline void check_unit(const Vector& u, Index p) {
  if (u.size() != p) {
    throw Error(ErrorKind::dimension_mismatch, "direction length does not match data dimension");
  }
  const double norm = u.norm();
  if (!(std::abs(norm - 1.0) <= 1e-10)) {
    std::ostringstream os;
    os << "direction must have unit norm, got " << norm;
    throw Error(ErrorKind::norm_violation, os.str());
  }
}

struct ProjectionMoments {
  double m3 = 0.0;
  double m4 = 0.0;
  Vector t3;  // mean of y^2 x
  Vector t4;  // mean of y^3 x
};

inline ProjectionMoments projection_moments(const Vector& u, const Matrix& x) {
  const Vector y = x * u;
  const double n = static_cast<double>(x.rows());
  CompensatedSum s3, s4;
  Vector y2(y.size()), y3(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    const double a = y(i) * y(i);
    y2(i) = a;
    y3(i) = a * y(i);
    s3.add(y3(i));
    s4.add(a * a);
  }
  ProjectionMoments m;
  m.m3 = s3.value() / n;
  m.m4 = s4.value() / n;
  m.t3 = x.transpose() * y2 / n;
  m.t4 = x.transpose() * y3 / n;
  return m;
}

inline Vector gradient_from_moments(const ProjectionMoments& m, const Vector& u, const Weights& w,
                                    GradientVariant variant) {
  const double kappa = m.m4 - 3.0;
  Vector t = w.alpha1() * m.m3 * m.t3;
  if (variant == GradientVariant::stabilized) {
    t += w.alpha2() * kappa * (m.t4 - 3.0 * u);
  } else {
    t += w.alpha2() * kappa * m.t4;
  }
  return t;
}

}  // namespace detail

/// G_alpha of a single sample: alpha * gamma^2 + (1 - alpha) * kappa^2.
inline double index_value(const Cumulants& c, const Weights& w) {
  return w.alpha() * c.gamma * c.gamma + (1.0 - w.alpha()) * c.kappa * c.kappa;
}

inline double g_alpha(const Vector& u, const WhitenedSample& data, const Weights& w) {
  detail::check_unit(u, data.p());
  const Vector y = data.rows * u;
  return index_value(standardized_cumulants(y), w);
}

inline Vector grad_t(const Vector& u, const WhitenedSample& data, const Weights& w) {
  detail::check_unit(u, data.p());
  return detail::gradient_from_moments(detail::projection_moments(u, data.rows), u, w, GradientVariant::plain);
}

/// Modified Newton-Raphson form: the fourth-cumulant factor multiplies
/// E[y^3 x] - 3u instead of E[y^3 x].
inline Vector grad_t_star(const Vector& u, const WhitenedSample& data, const Weights& w) {
  detail::check_unit(u, data.p());
  return detail::gradient_from_moments(detail::projection_moments(u, data.rows), u, w,
                                       GradientVariant::stabilized);
}

inline Vector gradient(const Vector& u, const WhitenedSample& data, const Weights& w, GradientVariant variant) {
  return variant == GradientVariant::plain ? grad_t(u, data, w) : grad_t_star(u, data, w);
}

/// Gradient rows stacked for every row of U (d x p).
inline Matrix gradient_rows(const Matrix& u, const WhitenedSample& data, const Weights& w, GradientVariant variant) {
  Matrix t(u.rows(), u.cols());
  for (Index k = 0; k < u.rows(); ++k) {
    t.row(k) = gradient(u.row(k).transpose(), data, w, variant).transpose();
  }
  return t;
}

inline Vector objective_rows(const Matrix& u, const WhitenedSample& data, const Weights& w) {
  Vector g(u.rows());
  for (Index k = 0; k < u.rows(); ++k) g(k) = g_alpha(u.row(k).transpose(), data, w);
  return g;
}

}  // namespace ngpp

#endif  // NGPP_OBJECTIVE_HPP
