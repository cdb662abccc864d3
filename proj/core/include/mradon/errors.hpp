#pragma once

#include <stdexcept>
#include <string>

namespace mradon {

// Machine-readable failure kinds surfaced by the library. The CLI maps the
// three exception classes below to exit codes (config 2, numerical 3, io 4).
enum class errc {
  contract_violation,
  degenerate_domain,
  out_of_range,
  unsupported_dimension,
  endpoint_proximity,
  non_converged_profile,
  non_converged_filter,
  out_of_domain,
  degenerate_pair,
  unidentifiable_constant,
  insufficient_directions,
  irregular_direction,
  non_convex_fit,
  divergence,
  config_invalid,
  io_failure,
};

inline const char* errc_name(errc k) {
  switch (k) {
    case errc::contract_violation:      return "contract-violation";
    case errc::degenerate_domain:       return "degenerate-domain";
    case errc::out_of_range:            return "out-of-range";
    case errc::unsupported_dimension:   return "unsupported-dimension";
    case errc::endpoint_proximity:      return "endpoint-proximity";
    case errc::non_converged_profile:   return "non-converged-profile";
    case errc::non_converged_filter:    return "non-converged-filter";
    case errc::out_of_domain:           return "out-of-domain";
    case errc::degenerate_pair:         return "degenerate-pair";
    case errc::unidentifiable_constant: return "unidentifiable-constant";
    case errc::insufficient_directions: return "insufficient-directions";
    case errc::irregular_direction:     return "irregular-direction";
    case errc::non_convex_fit:          return "non-convex-fit";
    case errc::divergence:              return "divergence";
    case errc::config_invalid:          return "config-invalid";
    case errc::io_failure:              return "io-failure";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc kind, const std::string& what)
      : std::runtime_error(std::string(errc_name(kind)) + ": " + what), kind_(kind) {}
  errc kind() const { return kind_; }

 private:
  errc kind_;
};

// Invalid configuration or violated operation precondition.
class config_error : public error {
 public:
  using error::error;
};

// Runtime numerical failure (divergence, unresolved data, degenerate geometry...).
class numerical_error : public error {
 public:
  using error::error;
};

class io_error : public error {
 public:
  io_error(const std::string& what) : error(errc::io_failure, what) {}
};

}  // namespace mradon
