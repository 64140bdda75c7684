#include "sphere_ot/error.hpp"

namespace sphere_ot {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AntipodalPoint: return "AntipodalPoint";
    case ErrorCode::OutOfChart: return "OutOfChart";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::BadCount: return "BadCount";
    case ErrorCode::FileParse: return "FileParse";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::EmptyStencil: return "EmptyStencil";
    case ErrorCode::SingularCost: return "SingularCost";
    case ErrorCode::ZeroDensity: return "ZeroDensity";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NoAntipodalNeighbor: return "NoAntipodalNeighbor";
    case ErrorCode::MassImbalance: return "MassImbalance";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::BijectionFailure: return "BijectionFailure";
    case ErrorCode::AmplitudeTooLarge: return "AmplitudeTooLarge";
  }
  return "Unknown";
}

bool is_config_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadCount:
    case ErrorCode::FileParse:
    case ErrorCode::ConfigError:
      return true;
    default:
      return false;
  }
}

}  // namespace sphere_ot
