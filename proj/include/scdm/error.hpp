#pragma once

#include <stdexcept>
#include <string>

namespace scdm {

/// Failure categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
  kInvalidArgument = 1,
  kDimensionMismatch,
  kNotPositiveDefinite,
  kRankDeficient,
  kIllConditioned,
  kNotOrthonormal,
  kInfeasible,
  kIo,
  kCorrupt,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace scdm
