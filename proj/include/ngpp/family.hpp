#ifndef NGPP_FAMILY_HPP
#define NGPP_FAMILY_HPP

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ngpp/error.hpp"

namespace ngpp {

/// Parametric source family. Every family is used in its standardized form
/// (zero mean, unit variance).
///
///   gamma(lambda)           density ~ z^(lambda-1) exp(-z), z > 0
///   exppower(lambda)        density ~ exp(-|z|^lambda)
///   normal_mixture(pi, mu)  pi N(0, 1) + (1 - pi) N(mu, 1)
struct Family {
  enum class Kind { gaussian, uniform, exponential, laplace, gamma, exppower, normal_mixture };

  Kind kind = Kind::gaussian;
  double lambda = 1.0;
  double pi = 0.5;
  double mu = 1.0;

  static Family gaussian() { return {Kind::gaussian}; }
  static Family uniform() { return {Kind::uniform}; }
  static Family exponential() { return {Kind::exponential}; }
  static Family laplace() { return {Kind::laplace}; }
  static Family gamma(double lambda) { return {Kind::gamma, lambda}; }
  static Family exppower(double lambda) { return {Kind::exppower, lambda}; }
  static Family normal_mixture(double pi, double mu) { return {Kind::normal_mixture, 1.0, pi, mu}; }

  bool is_gaussian() const noexcept {
    return kind == Kind::gaussian || (kind == Kind::exppower && lambda == 2.0);
  }

  void validate() const {
    if ((kind == Kind::gamma || kind == Kind::exppower) && !(lambda > 0.0 && std::isfinite(lambda))) {
      throw Error(ErrorKind::invalid_argument, "shape parameter lambda must be positive");
    }
    if (kind == Kind::normal_mixture) {
      if (!(pi > 0.0 && pi < 1.0)) throw Error(ErrorKind::invalid_argument, "mixture weight pi must lie in (0, 1)");
      if (!(mu != 0.0 && std::isfinite(mu))) throw Error(ErrorKind::invalid_argument, "mixture shift mu must be non-zero");
    }
  }

  std::string name() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
      case Kind::gaussian: return "gaussian";
      case Kind::uniform: return "uniform";
      case Kind::exponential: return "exponential";
      case Kind::laplace: return "laplace";
      case Kind::gamma: os << "gamma(" << lambda << ")"; return os.str();
      case Kind::exppower: os << "exppower(" << lambda << ")"; return os.str();
      case Kind::normal_mixture: os << "normal_mixture(" << pi << "," << mu << ")"; return os.str();
    }
    return "unknown";
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view s, std::string_view what) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::parse_error, "cannot parse '" + std::string(s) + "' as a number in " + std::string(what));
  }
  return v;
}

// Splits on `sep` at parenthesis depth zero.
inline std::vector<std::string_view> split_top_level(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == sep && depth == 0) {
      parts.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  parts.push_back(trim(s.substr(start)));
  return parts;
}

}  // namespace detail

/// Parses "uniform", "gamma(2)", "normal_mixture(0.3, 5)" and friends.
inline Family parse_family(std::string_view text) {
  const std::string_view s = detail::trim(text);
  const std::size_t open = s.find('(');
  const std::string_view head = detail::trim(s.substr(0, open));
  std::vector<double> args;
  if (open != std::string_view::npos) {
    if (s.back() != ')') throw Error(ErrorKind::parse_error, "unbalanced parentheses in family '" + std::string(s) + "'");
    for (std::string_view a : detail::split_top_level(s.substr(open + 1, s.size() - open - 2), ',')) {
      args.push_back(detail::parse_double(a, s));
    }
  }
  auto expect = [&](std::size_t count) {
    if (args.size() != count) {
      throw Error(ErrorKind::parse_error, "family '" + std::string(s) + "' expects " + std::to_string(count) + " argument(s)");
    }
  };
  Family f;
  if (head == "gaussian" || head == "normal") {
    expect(0);
    f = Family::gaussian();
  } else if (head == "uniform") {
    expect(0);
    f = Family::uniform();
  } else if (head == "exponential" || head == "exp") {
    expect(0);
    f = Family::exponential();
  } else if (head == "laplace") {
    expect(0);
    f = Family::laplace();
  } else if (head == "gamma") {
    expect(1);
    f = Family::gamma(args[0]);
  } else if (head == "exppower") {
    expect(1);
    f = Family::exppower(args[0]);
  } else if (head == "normal_mixture" || head == "mixture") {
    expect(2);
    f = Family::normal_mixture(args[0], args[1]);
  } else {
    throw Error(ErrorKind::parse_error, "unknown family '" + std::string(head) + "'");
  }
  f.validate();
  return f;
}

inline std::vector<Family> parse_family_list(std::string_view text) {
  std::vector<Family> out;
  for (std::string_view part : detail::split_top_level(text, ',')) {
    if (!part.empty()) out.push_back(parse_family(part));
  }
  return out;
}

}  // namespace ngpp

#endif  // NGPP_FAMILY_HPP
