#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "taxelmap/error.hpp"

namespace taxelmap::protocol {

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::uint8_t kCodecUniform8 = 0;
inline constexpr std::size_t kMaxFrameSamples = 65535;
inline constexpr std::size_t kHeaderBytes = 5;  // u32 length + u8 tag
inline constexpr std::uint32_t kMaxPayloadBytes = 1U << 24;

enum class Tag : std::uint8_t {
  Hello = 1,
  ListTextures = 2,
  TextureList = 3,
  Select = 4,
  Contact = 5,
  VibFrame = 6,
  Error = 7,
  Bye = 8,
};

/// Codes carried by ERROR messages.
enum class ErrorMessageCode : std::uint8_t {
  VersionMismatch = 1,
  UnknownTexture = 2,
  NoTextureSelected = 3,
  UVOutOfRange = 4,
  MalformedMessage = 5,
  UnknownTag = 6,
  Internal = 7,
};

struct Hello {
  std::uint8_t version = kProtocolVersion;
  friend bool operator==(const Hello&, const Hello&) = default;
};

struct ListTextures {
  friend bool operator==(const ListTextures&, const ListTextures&) = default;
};

struct TextureInfo {
  std::uint16_t id = 0;
  std::string name;
  std::uint16_t width_px = 0;
  std::uint16_t height_px = 0;
  friend bool operator==(const TextureInfo&, const TextureInfo&) = default;
};

struct TextureList {
  std::vector<TextureInfo> entries;
  friend bool operator==(const TextureList&, const TextureList&) = default;
};

struct Select {
  std::uint16_t id = 0;
  friend bool operator==(const Select&, const Select&) = default;
};

/// u, v in [0, 1]; depth_mm >= 0.
struct Contact {
  double t = 0.0;
  float u = 0.0F;
  float v = 0.0F;
  float depth_mm = 0.0F;
  friend bool operator==(const Contact&, const Contact&) = default;
};

/// One block of encoded vibrotactile samples. n is q.size().
struct VibFrame {
  std::uint8_t codec = kCodecUniform8;
  std::uint32_t seq = 0;
  double t0 = 0.0;
  float dt = 0.0F;
  float qmin = 0.0F;
  float qmax = 0.0F;
  std::vector<std::uint8_t> q;
  friend bool operator==(const VibFrame&, const VibFrame&) = default;
};

struct ErrorMessage {
  std::uint8_t code = 0;
  std::string text;
  friend bool operator==(const ErrorMessage&, const ErrorMessage&) = default;
};

struct Bye {
  friend bool operator==(const Bye&, const Bye&) = default;
};

using Message = std::variant<Hello, ListTextures, TextureList, Select, Contact, VibFrame, ErrorMessage, Bye>;

Tag tag_of(const Message& msg);
const char* type_name(Tag tag);

// ---- codec: per-frame min-max uniform 8-bit quantization ----

/// qmin/qmax are the sample extremes rounded outward to float; q_i is
/// round-half-up(255 (s_i - qmin) / (qmax - qmin)), or 0 when qmin == qmax.
/// Throws EmptyFrame (n == 0 or n > 65535) or NonFiniteSample.
VibFrame encode_frame(std::span<const double> samples, std::uint32_t seq, double t0, float dt);

/// s_i = qmin + q_i (qmax - qmin) / 255. Throws MalformedFrame.
std::vector<double> decode_frame(const VibFrame& frame);

// ---- framing ----

/// Thrown by read_message. `skip_bytes` is the number of bytes to discard to
/// resynchronize at the next frame boundary (0 when more input is needed).
class FrameError : public Error {
 public:
  FrameError(ErrorCode code, const std::string& message, std::size_t skip_bytes)
      : Error(code, message), skip_bytes_(skip_bytes) {}
  std::size_t skip_bytes() const noexcept { return skip_bytes_; }

 private:
  std::size_t skip_bytes_;
};

/// u32 BE payload length (bytes after the tag), u8 tag, payload with
/// big-endian numeric fields; text is u16 BE length + UTF-8; lists are a u16
/// count followed by the entries. Throws InvalidField on out-of-range fields.
std::vector<std::uint8_t> write_message(const Message& msg);

struct ReadResult {
  Message message;
  std::size_t consumed = 0;
};

/// Decodes the frame at the start of `bytes`. Throws FrameError with
/// TruncatedFrame, UnknownTag, LengthMismatch or InvalidField.
ReadResult read_message(std::span<const std::uint8_t> bytes);

/// Total frame size announced by a complete 5-byte header, if present.
std::optional<std::size_t> peek_frame_size(std::span<const std::uint8_t> bytes);

// ---- JSON mirror: {type, ...fields} with VIB_FRAME bytes as base64 "q" ----

nlohmann::json to_json_message(const Message& msg);
/// Throws ParseError (bad JSON shape), UnknownTag or InvalidField.
Message from_json_message(const nlohmann::json& j);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace taxelmap::protocol
