#pragma once

#include <stdexcept>
#include <string>

namespace pmsm {

enum class ErrorCode {
  InvalidArgument,
  Config,
  Geometry,
  Mesh,
  Solver,
  Uq,
  Io,
};

// All core failures are reported through this type; the C API layer maps
// ErrorCode onto pmsm_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace pmsm
