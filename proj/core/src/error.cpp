#include "taxelmap/error.hpp"

namespace taxelmap {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::FewerThan8Points: return "FewerThan8Points";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::PointAtInfinity: return "PointAtInfinity";
    case ErrorCode::NonConvexQuad: return "NonConvexQuad";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TOutOfRange: return "TOutOfRange";
    case ErrorCode::WOutOfRange: return "WOutOfRange";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::DegenerateWindow: return "DegenerateWindow";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorCode::DirectionMismatch: return "DirectionMismatch";
    case ErrorCode::LaneMismatch: return "LaneMismatch";
    case ErrorCode::ProjectionOutOfFrame: return "ProjectionOutOfFrame";
    case ErrorCode::NoTouchedPixels: return "NoTouchedPixels";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::EmptyFrame: return "EmptyFrame";
    case ErrorCode::NonFiniteSample: return "NonFiniteSample";
    case ErrorCode::MalformedFrame: return "MalformedFrame";
    case ErrorCode::UnknownTag: return "UnknownTag";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TruncatedFrame: return "TruncatedFrame";
    case ErrorCode::InvalidField: return "InvalidField";
    case ErrorCode::UVOutOfRange: return "UVOutOfRange";
    case ErrorCode::NoTextureSelected: return "NoTextureSelected";
    case ErrorCode::UnknownTexture: return "UnknownTexture";
    case ErrorCode::ConnectionFailed: return "ConnectionFailed";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace taxelmap
