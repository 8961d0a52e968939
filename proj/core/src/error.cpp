#include "relaxor/error.hpp"

namespace relaxor {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParameterDomain: return "parameter-domain";
    case ErrorCode::SingularScaling: return "singular-scaling";
    case ErrorCode::UnsupportedManifold: return "unsupported-manifold";
    case ErrorCode::OffOrbit: return "off-orbit";
    case ErrorCode::DegenerateOrbit: return "degenerate-orbit";
    case ErrorCode::InconsistentEndpoints: return "inconsistent-endpoints";
    case ErrorCode::LambertDomain: return "lambert-domain";
    case ErrorCode::InvalidConfig: return "invalid-config";
    case ErrorCode::NoSolution: return "no-solution";
    case ErrorCode::NonConvergence: return "non-convergence";
    case ErrorCode::InadmissibleOrbit: return "inadmissible-orbit";
    case ErrorCode::InconsistentJumpPair: return "inconsistent-jump-pair";
    case ErrorCode::Stiffness: return "stiffness";
    case ErrorCode::InsufficientData: return "insufficient-data";
  }
  return "unknown";
}

bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParameterDomain:
    case ErrorCode::SingularScaling:
    case ErrorCode::UnsupportedManifold:
    case ErrorCode::OffOrbit:
    case ErrorCode::DegenerateOrbit:
    case ErrorCode::InconsistentEndpoints:
    case ErrorCode::LambertDomain:
    case ErrorCode::InvalidConfig:
      return true;
    default:
      return false;
  }
}

}  // namespace relaxor
