#ifndef NGPP_ASYMPTOTICS_HPP
#define NGPP_ASYMPTOTICS_HPP

// Moment profiles of standardized source families and the limiting variances
// of the deflation-based and symmetric unmixing estimates under identity
// mixing.
//
// With alpha1 = 3 alpha, alpha2 = 4 (1 - alpha):
//
//   A_k  = (a1^2 z3_k + 2 a1 a2 z34_k + a2^2 z4_k) / (a1 g_k^2 + a2 k_k^2)^2
//   B_kl = (a1^2 (z3_k + z3_l + g_l^4) + 2 a1 a2 (z34_k + z34_l + g_l^2 k_l^2)
//           + a2^2 (z4_k + z4_l + k_l^4)) / (a1 (g_k^2 + g_l^2) + a2 (k_k^2 + k_l^2))^2
//   D_k  = (k_k + 2) / 4
//
// where z3 = g^2 (nu - g^2), z4 = k^2 (omega - beta^2), z34 = g k (eta - g beta).
//
// Deflation layout: ASV(w_kl) = A_k above the diagonal, A_l + 1 below it.
// Symmetric layout: ASV(w_kl) = B_kl inside the signal block, A_k in the
// noise block. Both share the diagonal D_k.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "ngpp/estimators.hpp"
#include "ngpp/family.hpp"
#include "ngpp/numcore.hpp"
#include "ngpp/objective.hpp"

namespace ngpp {

/// Moments of one standardized marginal.
struct CumulantProfile {
  double gamma = 0.0;  // E z^3
  double beta = 3.0;   // E z^4
  double kappa = 0.0;  // beta - 3
  double nu = 2.0;     // beta - 1
  double omega = 15.0; // E z^6 - gamma^2
  double eta = 0.0;    // E z^5 - gamma

  static CumulantProfile from_moments(double m3, double m4, double m5, double m6) {
    return {m3, m4, m4 - 3.0, m4 - 1.0, m6 - m3 * m3, m5 - m3};
  }

  double index(const Weights& w) const { return w.alpha() * gamma * gamma + (1.0 - w.alpha()) * kappa * kappa; }
};

namespace detail {

inline double double_factorial_odd(int j) {
  double r = 1.0;
  for (int i = j - 1; i > 1; i -= 2) r *= i;
  return r;
}

// E (Z + c)^r for Z ~ N(0, 1).
inline double shifted_normal_moment(int r, double c) {
  double total = 0.0;
  double binom = 1.0;
  for (int j = 0; j <= r; ++j) {
    if (j % 2 == 0) total += binom * std::pow(c, r - j) * double_factorial_odd(j);
    binom = binom * (r - j) / (j + 1);
  }
  return total;
}

inline CumulantProfile closed_form_profile(const Family& f) {
  using K = Family::Kind;
  switch (f.kind) {
    case K::gaussian: return CumulantProfile::from_moments(0.0, 3.0, 0.0, 15.0);
    case K::uniform: return CumulantProfile::from_moments(0.0, 9.0 / 5.0, 0.0, 27.0 / 7.0);
    case K::laplace: return CumulantProfile::from_moments(0.0, 6.0, 0.0, 90.0);
    case K::exponential:
    case K::gamma: {
      // Cumulants of Gamma(lambda, 1) are lambda (r - 1)!.
      const double l = f.kind == K::exponential ? 1.0 : f.lambda;
      const double k2 = l, k3 = 2 * l, k4 = 6 * l, k5 = 24 * l, k6 = 120 * l;
      const double mu3 = k3;
      const double mu4 = k4 + 3 * k2 * k2;
      const double mu5 = k5 + 10 * k3 * k2;
      const double mu6 = k6 + 15 * k4 * k2 + 10 * k3 * k3 + 15 * k2 * k2 * k2;
      const double sd = std::sqrt(l);
      return CumulantProfile::from_moments(mu3 / std::pow(sd, 3), mu4 / (l * l), mu5 / std::pow(sd, 5),
                                           mu6 / (l * l * l));
    }
    case K::exppower: {
      // E|z|^r = tau^{-r/lambda} Gamma((r+1)/lambda) / Gamma(1/lambda); tau cancels
      // after standardization.
      const double l = f.lambda;
      auto lg = [&](double r) { return std::lgamma((r + 1.0) / l); };
      const double base = std::lgamma(1.0 / l);
      auto even = [&](int k) { return std::exp(lg(2.0 * k) + (k - 1) * base - k * lg(2.0)); };
      return CumulantProfile::from_moments(0.0, even(2), 0.0, even(3));
    }
    case K::normal_mixture: {
      const double mean = (1.0 - f.pi) * f.mu;
      const double var = 1.0 + f.pi * (1.0 - f.pi) * f.mu * f.mu;
      auto central = [&](int r) {
        return f.pi * shifted_normal_moment(r, -mean) + (1.0 - f.pi) * shifted_normal_moment(r, f.mu - mean);
      };
      const double sd = std::sqrt(var);
      return CumulantProfile::from_moments(central(3) / std::pow(sd, 3), central(4) / std::pow(sd, 4),
                                           central(5) / std::pow(sd, 5), central(6) / std::pow(sd, 6));
    }
  }
  throw Error(ErrorKind::invalid_argument, "unknown family");
}

struct Density {
  std::function<double(double)> f;  // unnormalized
  std::vector<double> cuts;         // ordered integration breakpoints, may be +-inf
};

inline Density density_of(const Family& f) {
  using K = Family::Kind;
  const double inf = std::numeric_limits<double>::infinity();
  switch (f.kind) {
    case K::gaussian: return {[](double z) { return std::exp(-0.5 * z * z); }, {-inf, 0.0, inf}};
    case K::uniform: return {[](double) { return 1.0; }, {0.0, 1.0}};
    case K::exponential: return {[](double z) { return std::exp(-z); }, {0.0, 1.0, inf}};
    case K::laplace: return {[](double z) { return std::exp(-std::abs(z)); }, {-inf, 0.0, inf}};
    case K::gamma: {
      const double l = f.lambda;
      const double mode = std::max(l - 1.0, 1.0);
      return {[l](double z) { return z <= 0.0 ? 0.0 : std::exp((l - 1.0) * std::log(z) - z); }, {0.0, mode, inf}};
    }
    case K::exppower: {
      const double l = f.lambda;
      return {[l](double z) { return std::exp(-std::pow(std::abs(z), l)); }, {-inf, 0.0, inf}};
    }
    case K::normal_mixture: {
      const double pi = f.pi, mu = f.mu;
      return {[pi, mu](double z) {
                return pi * std::exp(-0.5 * z * z) + (1.0 - pi) * std::exp(-0.5 * (z - mu) * (z - mu));
              },
              {-inf, std::min(0.0, mu), std::max(0.0, mu), inf}};
    }
  }
  throw Error(ErrorKind::invalid_argument, "unknown family");
}

inline double integrate_pieces(const std::function<double(double)>& g, const std::vector<double>& cuts, double rel_tol) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double err = 0.0;
    double l1 = 0.0;
    const double piece = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, cuts[i], cuts[i + 1], 20,
                                                                                     rel_tol, &err, &l1);
    if (!(err <= std::max(1e-9 * l1, 1e-14))) {
      std::ostringstream os;
      os << "adaptive quadrature reached only " << err << " absolute error on [" << cuts[i] << ", " << cuts[i + 1] << "]";
      throw Error(ErrorKind::numeric_failure, os.str());
    }
    total += piece;
  }
  return total;
}

}  // namespace detail

/// Moments of the standardized law by closed form.
inline CumulantProfile profile_from_family(const Family& family) {
  family.validate();
  return detail::closed_form_profile(family);
}

/// Moments of the standardized law by adaptive Gauss-Kronrod integration of
/// the unnormalized density. Independent of the closed forms.
inline CumulantProfile quadrature_profile(const Family& family) {
  family.validate();
  if (family.kind == Family::Kind::gamma && family.lambda < 1.0) {
    // z = t^{1/lambda} removes the z^{lambda-1} singularity at the origin.
    const double l = family.lambda;
    auto moment = [l](auto&& h) {
      const double inf = std::numeric_limits<double>::infinity();
      return detail::integrate_pieces(
          [&](double t) {
            const double z = std::pow(t, 1.0 / l);
            return std::exp(-z) * h(z);
          },
          {0.0, 1.0, inf}, 1e-12);
    };
    const double m0 = moment([](double) { return 1.0; });
    const double mean = moment([](double z) { return z; }) / m0;
    const double var = moment([&](double z) { return (z - mean) * (z - mean); }) / m0;
    const double sd = std::sqrt(var);
    auto c = [&](int r) { return moment([&](double z) { return std::pow((z - mean) / sd, r); }) / m0; };
    return CumulantProfile::from_moments(c(3), c(4), c(5), c(6));
  }
  const detail::Density dens = detail::density_of(family);
  auto moment = [&](auto&& h) {
    return detail::integrate_pieces([&](double z) { return dens.f(z) * h(z); }, dens.cuts, 1e-12);
  };
  const double m0 = moment([](double) { return 1.0; });
  const double mean = moment([](double z) { return z; }) / m0;
  const double var = moment([&](double z) { return (z - mean) * (z - mean); }) / m0;
  const double sd = std::sqrt(var);
  auto c = [&](int r) { return moment([&](double z) { return std::pow((z - mean) / sd, r); }) / m0; };
  return CumulantProfile::from_moments(c(3), c(4), c(5), c(6));
}

/// Limiting variances for d signals. B's diagonal is unused and holds NaN.
struct AsvTable {
  Vector a, d, zeta3, zeta4, zeta34;
  Matrix b;
  Index p = 0;
  double tr_phi1_deflation = 0.0;
  double tr_phi1_symmetric = 0.0;
  double tr_phi2 = 0.0;

  double tr_phi1(Method m) const { return m == Method::deflation ? tr_phi1_deflation : tr_phi1_symmetric; }
};

namespace detail {

inline void check_identifiable(const std::vector<CumulantProfile>& profiles, const Weights& w) {
  if (profiles.empty()) throw Error(ErrorKind::invalid_argument, "need at least one signal profile");
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    const auto& c = profiles[k];
    const double denom = w.alpha1() * c.gamma * c.gamma + w.alpha2() * c.kappa * c.kappa;
    if (!(denom > 0.0)) {
      std::ostringstream os;
      os << "component " << k + 1 << " has alpha1 gamma^2 + alpha2 kappa^2 = " << denom
         << "; it cannot be separated with alpha = " << w.alpha();
      throw Error(ErrorKind::identifiability, os.str());
    }
  }
}

inline double zeta3(const CumulantProfile& c) { return c.gamma * c.gamma * (c.nu - c.gamma * c.gamma); }
inline double zeta4(const CumulantProfile& c) { return c.kappa * c.kappa * (c.omega - c.beta * c.beta); }
inline double zeta34(const CumulantProfile& c) { return c.gamma * c.kappa * (c.eta - c.gamma * c.beta); }

// Indices sorted by decreasing alpha gamma^2 + (1 - alpha) kappa^2, ties in input order.
inline std::vector<std::size_t> extraction_order(const std::vector<CumulantProfile>& profiles, const Weights& w) {
  std::vector<std::size_t> order(profiles.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return profiles[x].index(w) > profiles[y].index(w); });
  return order;
}

}  // namespace detail

inline double asv_a(const CumulantProfile& c, const Weights& w) {
  const double a1 = w.alpha1(), a2 = w.alpha2();
  const double denom = a1 * c.gamma * c.gamma + a2 * c.kappa * c.kappa;
  return (a1 * a1 * detail::zeta3(c) + 2 * a1 * a2 * detail::zeta34(c) + a2 * a2 * detail::zeta4(c)) / (denom * denom);
}

inline double asv_b(const CumulantProfile& k, const CumulantProfile& l, const Weights& w) {
  const double a1 = w.alpha1(), a2 = w.alpha2();
  const double g2 = l.gamma * l.gamma, k2 = l.kappa * l.kappa;
  const double num = a1 * a1 * (detail::zeta3(k) + detail::zeta3(l) + g2 * g2) +
                     2 * a1 * a2 * (detail::zeta34(k) + detail::zeta34(l) + g2 * k2) +
                     a2 * a2 * (detail::zeta4(k) + detail::zeta4(l) + k2 * k2);
  const double denom = a1 * (k.gamma * k.gamma + g2) + a2 * (k.kappa * k.kappa + k2);
  return num / (denom * denom);
}

inline double asv_d(const CumulantProfile& c) { return (c.kappa + 2.0) / 4.0; }

/// Table for the given signals in a p-dimensional model (p defaults to d).
/// The deflation trace assumes extraction in decreasing index order.
inline AsvTable asv_entries(const std::vector<CumulantProfile>& profiles, const Weights& w, Index p = 0) {
  detail::check_identifiable(profiles, w);
  const Index d = static_cast<Index>(profiles.size());
  if (p == 0) p = d;
  if (p < d) throw Error(ErrorKind::invalid_argument, "p must be at least the number of signals");
  AsvTable t;
  t.p = p;
  t.a.resize(d);
  t.d.resize(d);
  t.zeta3.resize(d);
  t.zeta4.resize(d);
  t.zeta34.resize(d);
  t.b = Matrix::Constant(d, d, std::numeric_limits<double>::quiet_NaN());
  for (Index k = 0; k < d; ++k) {
    const auto& c = profiles[static_cast<std::size_t>(k)];
    t.a(k) = asv_a(c, w);
    t.d(k) = asv_d(c);
    t.zeta3(k) = detail::zeta3(c);
    t.zeta4(k) = detail::zeta4(c);
    t.zeta34(k) = detail::zeta34(c);
    for (Index l = 0; l < d; ++l) {
      if (l != k) t.b(k, l) = asv_b(c, profiles[static_cast<std::size_t>(l)], w);
    }
  }
  const double sum_d = t.d.sum();
  const double sum_a = t.a.sum();
  double off_sym = 0.0;
  for (Index k = 0; k < d; ++k)
    for (Index l = 0; l < d; ++l)
      if (k != l) off_sym += t.b(k, l);
  const auto order = detail::extraction_order(profiles, w);
  double off_defl = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    // Pair (i, j), i extracted first: A_i above the diagonal plus A_i + 1 below.
    off_defl += static_cast<double>(order.size() - 1 - i) * (2.0 * t.a(static_cast<Index>(order[i])) + 1.0);
  }
  t.tr_phi1_symmetric = sum_d + off_sym;
  t.tr_phi1_deflation = sum_d + off_defl;
  t.tr_phi2 = static_cast<double>(p - d) * sum_a;
  return t;
}

inline double tr_phi2(const std::vector<CumulantProfile>& profiles, const Weights& w, Index p) {
  return asv_entries(profiles, w, p).tr_phi2;
}

/// Mean of the limiting law of n d D^2: off-diagonal variances of the signal
/// block plus tr(Phi_2).
inline double expected_ndd2(const std::vector<CumulantProfile>& profiles, const Weights& w, Index p, Method method) {
  const AsvTable t = asv_entries(profiles, w, p);
  return t.tr_phi1(method) - t.d.sum() + t.tr_phi2;
}

/// ASV(w_12) + ASV(w_21) for a pair of signals.
inline double v12(const CumulantProfile& first, const CumulantProfile& second, const Weights& w, Method method) {
  detail::check_identifiable({first, second}, w);
  if (method == Method::symmetric) return asv_b(first, second, w) + asv_b(second, first, w);
  const CumulantProfile& lead = first.index(w) >= second.index(w) ? first : second;
  return 2.0 * asv_a(lead, w) + 1.0;
}

/// Grid minimizer of A for a single signal.
inline std::pair<double, double> optimal_alpha(const CumulantProfile& c, const std::vector<double>& grid) {
  double best_alpha = std::numeric_limits<double>::quiet_NaN();
  double best = std::numeric_limits<double>::infinity();
  for (double alpha : grid) {
    const Weights w(alpha);
    const double denom = w.alpha1() * c.gamma * c.gamma + w.alpha2() * c.kappa * c.kappa;
    if (!(denom > 0.0)) continue;
    const double a = asv_a(c, w);
    if (a < best) {
      best = a;
      best_alpha = alpha;
    }
  }
  return {best_alpha, best};
}

}  // namespace ngpp

#endif  // NGPP_ASYMPTOTICS_HPP
