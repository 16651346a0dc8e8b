#pragma once

#include <stdexcept>
#include <string>

namespace qmarkov {

enum class ErrorCode {
  invalid_dimension,
  truncation_overflow,
  invalid_propagator,
  dimension_mismatch,
  invalid_state,
  invalid_argument,
  degenerate_outcome,
  incompatible_outcome,
  dt_too_large,
  invariant_violation,
};

const char* to_string(ErrorCode code);

// All library failures are reported through this type; `code()` lets callers
// branch on the failure class without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qmarkov
