#ifndef NGPP_SIMULATION_HPP
#define NGPP_SIMULATION_HPP

// Sampling from x = mu + Omega z with z = (s, n): independent standardized
// non-Gaussian signals followed by standard normal noise channels. Also runs
// the replication experiments that average n d D^2(W_hat).

#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ngpp/estimators.hpp"
#include "ngpp/evaluation.hpp"
#include "ngpp/family.hpp"
#include "ngpp/io.hpp"
#include "ngpp/numcore.hpp"
#include "ngpp/parallel.hpp"
#include "ngpp/random.hpp"

namespace ngpp {

struct Mixing {
  enum class Kind { identity, given, random };
  Kind kind = Kind::identity;
  Matrix matrix;           // used when kind == given
  std::uint64_t seed = 0;  // used when kind == random
};

struct SourceSpec {
  std::vector<Family> signals;
  Index noise_dims = 0;
  Mixing mixing;
  Vector location;  // empty means zero

  Index d() const noexcept { return static_cast<Index>(signals.size()); }
  Index p() const noexcept { return d() + noise_dims; }

  void validate() const {
    if (noise_dims < 0) throw Error(ErrorKind::invalid_argument, "noise_dims must be non-negative");
    if (p() < 1) throw Error(ErrorKind::invalid_argument, "model has no components");
    for (const auto& f : signals) {
      f.validate();
      if (f.is_gaussian()) throw Error(ErrorKind::invalid_argument, "signal families must be non-Gaussian");
    }
    if (mixing.kind == Mixing::Kind::given && (mixing.matrix.rows() != p() || mixing.matrix.cols() != p())) {
      throw Error(ErrorKind::dimension_mismatch, "given mixing matrix must be p x p");
    }
    if (location.size() != 0 && location.size() != p()) {
      throw Error(ErrorKind::dimension_mismatch, "location must have p entries");
    }
  }
};

/// Draws n values of the standardized family, using the family's exact mean
/// and standard deviation.
inline Vector draw_family(const Family& f, Index n, Rng& rng) {
  using K = Family::Kind;
  Vector z(n);
  switch (f.kind) {
    case K::gaussian: {
      std::normal_distribution<double> dist;
      for (Index i = 0; i < n; ++i) z(i) = dist(rng);
      break;
    }
    case K::uniform: {
      std::uniform_real_distribution<double> dist(0.0, 1.0);
      for (Index i = 0; i < n; ++i) z(i) = (dist(rng) - 0.5) * std::sqrt(12.0);
      break;
    }
    case K::exponential:
    case K::gamma: {
      const double l = f.kind == K::exponential ? 1.0 : f.lambda;
      std::gamma_distribution<double> dist(l, 1.0);
      for (Index i = 0; i < n; ++i) z(i) = (dist(rng) - l) / std::sqrt(l);
      break;
    }
    case K::laplace: {
      std::exponential_distribution<double> dist(1.0);
      std::bernoulli_distribution sign(0.5);
      for (Index i = 0; i < n; ++i) z(i) = (sign(rng) ? 1.0 : -1.0) * dist(rng) / std::sqrt(2.0);
      break;
    }
    case K::exppower: {
      // |z|^lambda ~ Gamma(1 / lambda) for density exp(-|z|^lambda).
      const double l = f.lambda;
      std::gamma_distribution<double> dist(1.0 / l, 1.0);
      std::bernoulli_distribution sign(0.5);
      const double sd = std::exp(0.5 * (std::lgamma(3.0 / l) - std::lgamma(1.0 / l)));
      for (Index i = 0; i < n; ++i) z(i) = (sign(rng) ? 1.0 : -1.0) * std::pow(dist(rng), 1.0 / l) / sd;
      break;
    }
    case K::normal_mixture: {
      std::bernoulli_distribution first(f.pi);
      std::normal_distribution<double> dist;
      const double mean = (1.0 - f.pi) * f.mu;
      const double sd = std::sqrt(1.0 + f.pi * (1.0 - f.pi) * f.mu * f.mu);
      for (Index i = 0; i < n; ++i) {
        const double shift = first(rng) ? 0.0 : f.mu;
        z(i) = (dist(rng) + shift - mean) / sd;
      }
      break;
    }
  }
  return z;
}

struct ModelSample {
  DataMatrix x;
  Matrix omega;
  Matrix latent;  // n x p, signals first
};

inline Matrix mixing_matrix(const SourceSpec& spec) {
  switch (spec.mixing.kind) {
    case Mixing::Kind::identity: return Matrix::Identity(spec.p(), spec.p());
    case Mixing::Kind::given: return spec.mixing.matrix;
    case Mixing::Kind::random: {
      Rng rng = make_rng(spec.mixing.seed, {0x313});
      return standard_normal(spec.p(), spec.p(), rng);
    }
  }
  return Matrix::Identity(spec.p(), spec.p());
}

/// One sample of size n. Column j of replicate `rep` draws from its own
/// stream, so columns and replicates are independent of evaluation order.
inline ModelSample sample_model(const SourceSpec& spec, Index n, std::uint64_t seed, std::uint64_t rep = 0) {
  spec.validate();
  const Index p = spec.p();
  Matrix latent(n, p);
  for (Index j = 0; j < p; ++j) {
    Rng rng = make_rng(seed, {rep, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(j)});
    const Family f = j < spec.d() ? spec.signals[static_cast<std::size_t>(j)] : Family::gaussian();
    latent.col(j) = draw_family(f, n, rng);
  }
  Matrix omega = mixing_matrix(spec);
  Matrix x = latent * omega.transpose();
  if (spec.location.size() == p) x.rowwise() += spec.location.transpose();
  return {DataMatrix(std::move(x)), std::move(omega), std::move(latent)};
}

struct ReplicationConfig {
  SourceSpec spec;
  std::vector<Index> sample_sizes;
  std::vector<Method> methods{Method::deflation, Method::symmetric};
  std::vector<double> alphas{0.8};
  int reps = 100;
  std::uint64_t seed = 0;
  FitOptions fit;
  unsigned threads = 1;
  bool keep_values = false;

  void validate() const {
    spec.validate();
    if (spec.d() < 1) throw Error(ErrorKind::invalid_argument, "replications need at least one signal");
    if (reps < 1) throw Error(ErrorKind::invalid_argument, "reps must be at least 1");
    if (sample_sizes.empty() || methods.empty() || alphas.empty()) {
      throw Error(ErrorKind::invalid_argument, "sample_sizes, methods and alphas must be non-empty");
    }
    for (Index n : sample_sizes) {
      if (n < 10 * spec.p()) throw Error(ErrorKind::invalid_argument, "sample sizes must be at least 10 p");
    }
    for (double a : alphas) Weights{a};
    fit.validate();
  }
};

struct FitOutcome {
  Matrix w;
  bool ok = true;
};

using Fitter = std::function<FitOutcome(const ModelSample&, Method, Index d, const Weights&, const FitOptions&)>;

inline FitOutcome library_fitter(const ModelSample& s, Method m, Index d, const Weights& w, const FitOptions& o) {
  try {
    const SeparationEstimate est = fit(s.x, m, d, w, o);
    return {est.w, est.converged()};
  } catch (const Error&) {
    return {Matrix(), false};
  }
}

struct SummaryRow {
  Method method = Method::deflation;
  double alpha = 0.0;
  Index n = 0;
  Index noise_dims = 0;
  double mean_nddsq = 0.0;
  double stderr_nddsq = 0.0;
  int failures = 0;
  int used = 0;
  std::vector<double> values;  // per-replicate n d D^2, only when requested
};

/// Mean and standard error of n d D^2(W_hat) per (method, alpha, n).
/// Replicates failing to converge are excluded and counted.
inline std::vector<SummaryRow> run_replications(const ReplicationConfig& cfg, const Fitter& fitter = library_fitter) {
  cfg.validate();
  const Index d = cfg.spec.d();
  const std::size_t cells_per_n = cfg.methods.size() * cfg.alphas.size();
  const std::size_t cells = cfg.sample_sizes.size() * cells_per_n;
  const std::size_t reps = static_cast<std::size_t>(cfg.reps);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> values(reps * cells, nan);

  parallel_for(reps, cfg.threads, [&](std::size_t rep) {
    for (std::size_t in = 0; in < cfg.sample_sizes.size(); ++in) {
      const Index n = cfg.sample_sizes[in];
      const ModelSample sample = sample_model(cfg.spec, n, cfg.seed, rep);
      for (std::size_t im = 0; im < cfg.methods.size(); ++im) {
        for (std::size_t ia = 0; ia < cfg.alphas.size(); ++ia) {
          FitOptions o = cfg.fit;
          o.seed = stream_seed(cfg.seed, {0xf17, rep, in});
          const FitOutcome out = fitter(sample, cfg.methods[im], d, Weights(cfg.alphas[ia]), o);
          double v = nan;
          if (out.ok && out.w.rows() == d) {
            try {
              const double dist = mdi(out.w, sample.omega).value;
              v = static_cast<double>(n) * static_cast<double>(d) * dist * dist;
            } catch (const Error&) {
              v = nan;
            }
          }
          values[rep * cells + in * cells_per_n + im * cfg.alphas.size() + ia] = v;
        }
      }
    }
  });

  std::vector<SummaryRow> rows;
  for (std::size_t in = 0; in < cfg.sample_sizes.size(); ++in) {
    for (std::size_t im = 0; im < cfg.methods.size(); ++im) {
      for (std::size_t ia = 0; ia < cfg.alphas.size(); ++ia) {
        const std::size_t cell = in * cells_per_n + im * cfg.alphas.size() + ia;
        SummaryRow row;
        row.method = cfg.methods[im];
        row.alpha = cfg.alphas[ia];
        row.n = cfg.sample_sizes[in];
        row.noise_dims = cfg.spec.noise_dims;
        // Welford accumulation in replicate order.
        double mean = 0.0, m2 = 0.0;
        for (std::size_t rep = 0; rep < reps; ++rep) {
          const double v = values[rep * cells + cell];
          if (cfg.keep_values) row.values.push_back(v);
          if (std::isnan(v)) {
            ++row.failures;
            continue;
          }
          ++row.used;
          const double delta = v - mean;
          mean += delta / row.used;
          m2 += delta * (v - mean);
        }
        row.mean_nddsq = row.used > 0 ? mean : nan;
        row.stderr_nddsq = row.used > 1 ? std::sqrt(m2 / (row.used - 1) / row.used) : nan;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

namespace detail {

inline bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorKind::parse_error, "expected a boolean, got '" + std::string(v) + "'");
}

inline long parse_integer(std::string_view v, std::string_view key) {
  const double x = parse_double(v, key);
  if (x != std::floor(x) || std::abs(x) > 9.0e15) {
    throw Error(ErrorKind::parse_error, "expected an integer for '" + std::string(key) + "'");
  }
  return static_cast<long>(x);
}

inline std::uint64_t parse_seed(std::string_view v, std::string_view key) {
  v = trim(v);
  std::uint64_t s = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error(ErrorKind::parse_error, "expected an unsigned integer for '" + std::string(key) + "'");
  }
  return s;
}

}  // namespace detail

inline Method parse_method(std::string_view s) {
  s = detail::trim(s);
  if (s == "deflation") return Method::deflation;
  if (s == "symmetric") return Method::symmetric;
  throw Error(ErrorKind::parse_error, "unknown method '" + std::string(s) + "'");
}

inline GradientVariant parse_gradient(std::string_view s) {
  s = detail::trim(s);
  if (s == "plain") return GradientVariant::plain;
  if (s == "stabilized") return GradientVariant::stabilized;
  throw Error(ErrorKind::parse_error, "unknown gradient variant '" + std::string(s) + "'");
}

/// key = value lines, '#' starts a comment. Keys:
///   signals, noise_dims, mixing (identity | random | path to a p x p CSV),
///   mixing_seed, location, sample_sizes, methods, alphas, reps, seed, tol,
///   max_iter, gradient (plain | stabilized), threads, keep_values.
inline ReplicationConfig parse_replication_config(std::istream& in) {
  ReplicationConfig cfg;
  std::string raw;
  int line_no = 0;
  std::string mixing = "identity";
  std::vector<double> location;
  bool have_signals = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::parse_error, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    try {
      auto list = [&] { return detail::split_top_level(value, ','); };
      if (key == "signals") {
        cfg.spec.signals = parse_family_list(value);
        have_signals = true;
      } else if (key == "noise_dims") {
        cfg.spec.noise_dims = detail::parse_integer(value, key);
      } else if (key == "mixing") {
        mixing = std::string(value);
      } else if (key == "mixing_seed") {
        cfg.spec.mixing.seed = detail::parse_seed(value, key);
      } else if (key == "location") {
        location.clear();
        for (auto v : list()) location.push_back(detail::parse_double(v, key));
      } else if (key == "sample_sizes") {
        cfg.sample_sizes.clear();
        for (auto v : list()) cfg.sample_sizes.push_back(detail::parse_integer(v, key));
      } else if (key == "methods") {
        cfg.methods.clear();
        for (auto v : list()) cfg.methods.push_back(parse_method(v));
      } else if (key == "alphas") {
        cfg.alphas.clear();
        for (auto v : list()) cfg.alphas.push_back(detail::parse_double(v, key));
      } else if (key == "reps") {
        cfg.reps = static_cast<int>(detail::parse_integer(value, key));
      } else if (key == "seed") {
        cfg.seed = detail::parse_seed(value, key);
      } else if (key == "tol") {
        cfg.fit.tol = detail::parse_double(value, key);
      } else if (key == "max_iter") {
        cfg.fit.max_iter = static_cast<int>(detail::parse_integer(value, key));
      } else if (key == "gradient") {
        cfg.fit.gradient = parse_gradient(value);
      } else if (key == "threads") {
        cfg.threads = static_cast<unsigned>(detail::parse_integer(value, key));
      } else if (key == "keep_values") {
        cfg.keep_values = detail::parse_bool(value);
      } else {
        throw Error(ErrorKind::parse_error, "unknown key '" + key + "'");
      }
    } catch (const Error& e) {
      throw Error(e.kind(), "config line " + std::to_string(line_no) + ": " + e.detail());
    }
  }
  if (!have_signals) throw Error(ErrorKind::parse_error, "config must set 'signals'");
  if (mixing == "identity") {
    cfg.spec.mixing.kind = Mixing::Kind::identity;
  } else if (mixing == "random") {
    cfg.spec.mixing.kind = Mixing::Kind::random;
  } else {
    cfg.spec.mixing.kind = Mixing::Kind::given;
    cfg.spec.mixing.matrix = io::read_csv(mixing).values;
  }
  if (!location.empty()) cfg.spec.location = Eigen::Map<const Vector>(location.data(), static_cast<Index>(location.size()));
  cfg.validate();
  return cfg;
}

}  // namespace ngpp

#endif  // NGPP_SIMULATION_HPP
