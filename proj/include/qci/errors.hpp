#pragma once

#include <stdexcept>
#include <string>

namespace qci {

enum class ErrorCode
{
  domain,
  invalid_bracket,
  invalid_params,
  data_required,
  nonpositive_data,
  empty_data,
  degenerate_data,
  too_few_observations,
  zero_density,
  fit_failure,
  degenerate_beta,
  incompatible_method,
  spec_validation,
  parse,
  unknown_family,
};

//! Exception carrying a machine-readable category. The CLI maps categories
//! to exit codes (data problems -> 3, numerical problems -> 4).
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string& what)
    : std::runtime_error(what)
    , code_(code)
  {}

  ErrorCode code() const noexcept { return code_; }

  //! true for problems with the supplied data rather than the numerics
  bool is_data_error() const noexcept
  {
    switch (code_) {
      case ErrorCode::nonpositive_data:
      case ErrorCode::empty_data:
      case ErrorCode::degenerate_data:
      case ErrorCode::too_few_observations:
      case ErrorCode::data_required:
      case ErrorCode::parse:
        return true;
      default:
        return false;
    }
  }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what)
{
  throw Error(code, what);
}

} // namespace qci
