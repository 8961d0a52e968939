#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace relaxor {

enum class ErrorCode {
  // invalid input
  ParameterDomain,
  SingularScaling,
  UnsupportedManifold,
  OffOrbit,
  DegenerateOrbit,
  InconsistentEndpoints,
  LambertDomain,
  InvalidConfig,
  // numerical failure
  NoSolution,
  NonConvergence,
  InadmissibleOrbit,
  InconsistentJumpPair,
  Stiffness,
  InsufficientData,
};

std::string_view to_string(ErrorCode code);

/// True for codes that signal bad caller input rather than a numerical failure.
bool is_input_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace relaxor
