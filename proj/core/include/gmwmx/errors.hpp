#ifndef GMWMX_ERRORS_HPP
#define GMWMX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gmwmx {

// Every failure surfaced by the library carries one of these kinds, so
// callers (and the CLI exit-code mapping) can react without string matching.
enum class ErrorKind {
  invalid_argument,   // malformed inputs, dimension mismatches
  domain,             // parameter outside the admissible region
  rank_deficient,     // design matrix loses full column rank
  degenerate_column,  // offset epoch outside the observation span
  not_positive_definite,
  insufficient_length,
  under_identified,   // more noise parameters than wavelet scales
  degenerate_weight,  // zero empirical wavelet variance
  parse,              // unparsable content (reported with its line number)
  parse_empty,        // no data rows at all
  parse_order,        // epochs out of order
  config,             // malformed run configuration
  size_cap,           // request beyond a desk-scale cap
  harness,            // Monte-Carlo harness failure budget exceeded
};

const char* error_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_code(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  const char* code() const noexcept { return error_code(kind_); }

 private:
  ErrorKind kind_;
};

inline const char* error_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "E_INVALID_ARGUMENT";
    case ErrorKind::domain: return "E_DOMAIN";
    case ErrorKind::rank_deficient: return "E_RANK_DEFICIENT";
    case ErrorKind::degenerate_column: return "E_DEGENERATE_COLUMN";
    case ErrorKind::not_positive_definite: return "E_NOT_POSITIVE_DEFINITE";
    case ErrorKind::insufficient_length: return "E_INSUFFICIENT_LENGTH";
    case ErrorKind::under_identified: return "E_UNDER_IDENTIFIED";
    case ErrorKind::degenerate_weight: return "E_DEGENERATE_WEIGHT";
    case ErrorKind::parse: return "E_PARSE";
    case ErrorKind::parse_empty: return "E_PARSE_EMPTY";
    case ErrorKind::parse_order: return "E_PARSE_ORDER";
    case ErrorKind::config: return "E_CONFIG";
    case ErrorKind::size_cap: return "E_SIZE_CAP";
    case ErrorKind::harness: return "E_HARNESS";
  }
  return "E_UNKNOWN";
}

}  // namespace gmwmx

#endif
