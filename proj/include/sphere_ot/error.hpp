#pragma once

#include <stdexcept>
#include <string>

namespace sphere_ot {

enum class ErrorCode {
  AntipodalPoint,
  OutOfChart,
  ZeroVector,
  BadCount,
  FileParse,
  DegenerateCloud,
  EmptyStencil,
  SingularCost,
  ZeroDensity,
  ConfigError,
  NoAntipodalNeighbor,
  MassImbalance,
  NonConvergence,
  BijectionFailure,
  AmplitudeTooLarge,
};

const char* to_string(ErrorCode code);

// Configuration and input problems, as opposed to numerical failures.
bool is_config_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sphere_ot
