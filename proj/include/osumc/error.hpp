#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace osumc {

enum class ErrorCode {
  invalid_argument,
  parse_error,
  non_finite_value,
  missing_responses,
  nonpositive_weight,
  singular_information,
  not_converged,
  pilot_too_small,
  degenerate_weights,
  rank_deficient,
  incompatible_scenario,
  infeasible_method,
  too_few_replications,
  degenerate_sample,
  overflow,
  unknown_config_key,
  measurement_violation,
  io_error,
};

/// Stable machine-readable tag, used as the prefix of CLI error messages.
constexpr std::string_view error_tag(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "E_INVALID_ARGUMENT";
    case ErrorCode::parse_error: return "E_PARSE";
    case ErrorCode::non_finite_value: return "E_NON_FINITE";
    case ErrorCode::missing_responses: return "E_MISSING_RESPONSES";
    case ErrorCode::nonpositive_weight: return "E_NONPOSITIVE_WEIGHT";
    case ErrorCode::singular_information: return "E_SINGULAR_INFORMATION";
    case ErrorCode::not_converged: return "E_NOT_CONVERGED";
    case ErrorCode::pilot_too_small: return "E_PILOT_TOO_SMALL";
    case ErrorCode::degenerate_weights: return "E_DEGENERATE_WEIGHTS";
    case ErrorCode::rank_deficient: return "E_RANK_DEFICIENT";
    case ErrorCode::incompatible_scenario: return "E_INCOMPATIBLE_SCENARIO";
    case ErrorCode::infeasible_method: return "E_INFEASIBLE_METHOD";
    case ErrorCode::too_few_replications: return "E_TOO_FEW_REPLICATIONS";
    case ErrorCode::degenerate_sample: return "E_DEGENERATE_SAMPLE";
    case ErrorCode::overflow: return "E_OVERFLOW";
    case ErrorCode::unknown_config_key: return "E_UNKNOWN_CONFIG_KEY";
    case ErrorCode::measurement_violation: return "E_MEASUREMENT_VIOLATION";
    case ErrorCode::io_error: return "E_IO";
  }
  return "E_UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace osumc
