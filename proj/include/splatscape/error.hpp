#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace splatscape {

enum class ErrorCode {
  BehindCamera,
  NonPositiveDepth,
  EmptyMask,
  NoTargets,
  DegenerateDepth,
  Exhausted,
  InvalidRange,
  TimestepOutOfRange,
  DegenerateRender,
  ShapeMismatch,
  EndpointUnavailable,
  ProtocolError,
  Timeout,
  UnparseableAnswer,
  EmptyOverlap,
  ConfigInvalid,
  AdapterFailure,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so callers
/// (and the CLI exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace splatscape
