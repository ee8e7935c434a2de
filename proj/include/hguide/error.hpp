#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hguide {

enum class ErrorCode {
  ZeroNormQuaternion,
  NonUnitQuaternion,
  NonPositiveDepth,
  PixelOutOfBounds,
  BehindCamera,
  InvalidConfig,
  InvalidPeriod,
  TargetNotDetected,
  HandNotDetected,
  EmptyInput,
  DegenerateTrace,
  NoActiveTrial,
  TrialAlreadyActive,
  MalformedRecord,
  MalformedScene,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hguide
