#ifndef NGPP_ERROR_HPP
#define NGPP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ngpp {

enum class ErrorKind {
  symmetry_violation,
  numeric_failure,
  rank_deficiency,
  degenerate_sample,
  norm_violation,
  identifiability,
  dimension_mismatch,
  invalid_argument,
  parse_error,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::symmetry_violation: return "symmetry-violation";
    case ErrorKind::numeric_failure: return "numeric-failure";
    case ErrorKind::rank_deficiency: return "rank-deficiency";
    case ErrorKind::degenerate_sample: return "degenerate-sample";
    case ErrorKind::norm_violation: return "norm-violation";
    case ErrorKind::identifiability: return "identifiability";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::parse_error: return "parse-error";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace ngpp

#endif  // NGPP_ERROR_HPP
