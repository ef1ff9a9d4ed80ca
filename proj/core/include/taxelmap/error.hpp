#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace taxelmap {

enum class ErrorCode {
  // geometry
  FewerThan8Points,
  DegenerateConfiguration,
  PointAtInfinity,
  NonConvexQuad,
  // scansim
  InvalidConfig,
  TOutOfRange,
  // alignment
  WOutOfRange,
  TooFewSamples,
  DegenerateWindow,
  EmptyWindow,
  NonMonotonicTimestamps,
  DirectionMismatch,
  // vibmap
  LaneMismatch,
  ProjectionOutOfFrame,
  NoTouchedPixels,
  MalformedFile,
  // protocol
  EmptyFrame,
  NonFiniteSample,
  MalformedFrame,
  UnknownTag,
  LengthMismatch,
  TruncatedFrame,
  InvalidField,
  // server / client
  UVOutOfRange,
  NoTextureSelected,
  UnknownTexture,
  ConnectionFailed,
  ProtocolError,
  // shared
  IoError,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every recoverable failure in the library is reported as an Error carrying
/// a machine-checkable code; what() holds a human-readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace taxelmap
