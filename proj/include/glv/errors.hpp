#pragma once

#include <stdexcept>
#include <string>

namespace glv {

/// Error categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
  InvalidArgument = 1,
  SelfIntersection,
  DegenerateLoop,
  MeshFailure,
  SingularSystem,
  NoConvergence,
  ShootFailure,
  OutOfTable,
  VanishingData,
  NonIntegerWinding,
  VanishingModulus,
  NonSimplyConnected,
  InconsistentPhase,
  WindowTooLarge,
  GeometryError,
  ParseError,
  ValidationError,
  IoError,
  FitError,
  Internal
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace glv
