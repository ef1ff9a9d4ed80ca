#include "taxelmap/protocol.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace taxelmap::protocol {
namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    buf_.push_back(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void text(const std::string& s) {
    if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorCode::InvalidField, "text longer than 65535 bytes");
    }
    u16(static_cast<std::uint16_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void bytes(const std::vector<std::uint8_t>& b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

// Reads a payload; running past the end or leaving bytes behind is a LengthMismatch.
class Reader {
 public:
  Reader(std::span<const std::uint8_t> payload, std::size_t frame_size) : p_(payload), frame_size_(frame_size) {}

  std::uint8_t u8() { return need(1)[0]; }
  std::uint16_t u16() {
    const auto* b = need(2);
    return static_cast<std::uint16_t>(b[0] << 8 | b[1]);
  }
  std::uint32_t u32() {
    const auto* b = need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | b[i];
    return v;
  }
  std::uint64_t u64() {
    const auto* b = need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = v << 8 | b[i];
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string text() {
    const std::uint16_t n = u16();
    const auto* b = need(n);
    return std::string(reinterpret_cast<const char*>(b), n);
  }
  std::vector<std::uint8_t> bytes(std::size_t n) {
    const auto* b = need(n);
    return std::vector<std::uint8_t>(b, b + n);
  }
  void finish() const {
    if (pos_ != p_.size()) {
      throw FrameError(ErrorCode::LengthMismatch, "payload has " + std::to_string(p_.size() - pos_) + " trailing bytes",
                       frame_size_);
    }
  }
  [[noreturn]] void invalid(const std::string& why) const {
    throw FrameError(ErrorCode::InvalidField, why, frame_size_);
  }

 private:
  const std::uint8_t* need(std::size_t n) {
    if (p_.size() - pos_ < n) {
      throw FrameError(ErrorCode::LengthMismatch, "payload shorter than its fields", frame_size_);
    }
    const auto* b = p_.data() + pos_;
    pos_ += n;
    return b;
  }

  std::span<const std::uint8_t> p_;
  std::size_t pos_ = 0;
  std::size_t frame_size_;
};

bool unit_interval(float x) { return x >= 0.0F && x <= 1.0F; }

void validate_contact(const Contact& c) {
  if (!std::isfinite(c.t)) throw Error(ErrorCode::InvalidField, "contact time must be finite");
  if (!unit_interval(c.u) || !unit_interval(c.v)) throw Error(ErrorCode::InvalidField, "contact u, v must lie in [0, 1]");
  if (!(c.depth_mm >= 0.0F) || !std::isfinite(c.depth_mm)) throw Error(ErrorCode::InvalidField, "contact depth must be >= 0");
}

float round_down_to_float(double v) {
  float f = static_cast<float>(v);
  if (static_cast<double>(f) > v) f = std::nextafter(f, -std::numeric_limits<float>::infinity());
  return f;
}

float round_up_to_float(double v) {
  float f = static_cast<float>(v);
  if (static_cast<double>(f) < v) f = std::nextafter(f, std::numeric_limits<float>::infinity());
  return f;
}

}  // namespace

Tag tag_of(const Message& msg) { return static_cast<Tag>(msg.index() + 1); }

const char* type_name(Tag tag) {
  switch (tag) {
    case Tag::Hello: return "HELLO";
    case Tag::ListTextures: return "LIST_TEXTURES";
    case Tag::TextureList: return "TEXTURE_LIST";
    case Tag::Select: return "SELECT";
    case Tag::Contact: return "CONTACT";
    case Tag::VibFrame: return "VIB_FRAME";
    case Tag::Error: return "ERROR";
    case Tag::Bye: return "BYE";
  }
  return "UNKNOWN";
}

VibFrame encode_frame(std::span<const double> samples, std::uint32_t seq, double t0, float dt) {
  if (samples.empty() || samples.size() > kMaxFrameSamples) {
    throw Error(ErrorCode::EmptyFrame, "frame must hold 1..65535 samples, got " + std::to_string(samples.size()));
  }
  double lo = samples[0], hi = samples[0];
  for (double s : samples) {
    if (!std::isfinite(s)) throw Error(ErrorCode::NonFiniteSample, "sample is not finite");
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  VibFrame frame;
  frame.seq = seq;
  frame.t0 = t0;
  frame.dt = dt;
  frame.qmin = round_down_to_float(lo);
  frame.qmax = round_up_to_float(hi);
  frame.q.resize(samples.size(), 0);
  const double qmin = frame.qmin;
  const double range = static_cast<double>(frame.qmax) - qmin;
  if (range > 0.0) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double level = std::floor(255.0 * (samples[i] - qmin) / range + 0.5);
      frame.q[i] = static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0));
    }
  }
  return frame;
}

std::vector<double> decode_frame(const VibFrame& frame) {
  if (frame.codec != kCodecUniform8) throw Error(ErrorCode::MalformedFrame, "unsupported codec id");
  if (frame.q.empty() || frame.q.size() > kMaxFrameSamples) throw Error(ErrorCode::MalformedFrame, "bad sample count");
  if (!std::isfinite(frame.qmin) || !std::isfinite(frame.qmax) || frame.qmin > frame.qmax) {
    throw Error(ErrorCode::MalformedFrame, "invalid quantization range");
  }
  const double qmin = frame.qmin, qmax = frame.qmax;
  const double range = qmax - qmin;
  std::vector<double> out(frame.q.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp(qmin + frame.q[i] * range / 255.0, qmin, qmax);
  }
  return out;
}

std::vector<std::uint8_t> write_message(const Message& msg) {
  Writer payload;
  std::visit(
      [&payload](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Hello>) {
          payload.u8(m.version);
        } else if constexpr (std::is_same_v<M, TextureList>) {
          if (m.entries.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw Error(ErrorCode::InvalidField, "too many texture entries");
          }
          payload.u16(static_cast<std::uint16_t>(m.entries.size()));
          for (const auto& e : m.entries) {
            payload.u16(e.id);
            payload.text(e.name);
            payload.u16(e.width_px);
            payload.u16(e.height_px);
          }
        } else if constexpr (std::is_same_v<M, Select>) {
          payload.u16(m.id);
        } else if constexpr (std::is_same_v<M, Contact>) {
          validate_contact(m);
          payload.f64(m.t);
          payload.f32(m.u);
          payload.f32(m.v);
          payload.f32(m.depth_mm);
        } else if constexpr (std::is_same_v<M, VibFrame>) {
          if (m.q.empty() || m.q.size() > kMaxFrameSamples) throw Error(ErrorCode::InvalidField, "bad sample count");
          payload.u8(m.codec);
          payload.u32(m.seq);
          payload.f64(m.t0);
          payload.f32(m.dt);
          payload.u16(static_cast<std::uint16_t>(m.q.size()));
          payload.f32(m.qmin);
          payload.f32(m.qmax);
          payload.bytes(m.q);
        } else if constexpr (std::is_same_v<M, ErrorMessage>) {
          payload.u8(m.code);
          payload.text(m.text);
        }
        // ListTextures and Bye carry no payload.
      },
      msg);
  const auto body = payload.take();

  Writer frame;
  frame.u32(static_cast<std::uint32_t>(body.size()));
  frame.u8(static_cast<std::uint8_t>(tag_of(msg)));
  frame.bytes(body);
  return frame.take();
}

std::optional<std::size_t> peek_frame_size(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) return std::nullopt;
  const std::uint32_t len = static_cast<std::uint32_t>(bytes[0]) << 24 | static_cast<std::uint32_t>(bytes[1]) << 16 |
                            static_cast<std::uint32_t>(bytes[2]) << 8 | bytes[3];
  return kHeaderBytes + static_cast<std::size_t>(len);
}

ReadResult read_message(std::span<const std::uint8_t> bytes) {
  const auto size = peek_frame_size(bytes);
  if (!size) throw FrameError(ErrorCode::TruncatedFrame, "incomplete frame header", 0);
  if (*size - kHeaderBytes > kMaxPayloadBytes) {
    throw FrameError(ErrorCode::LengthMismatch, "payload length exceeds limit", 0);
  }
  if (bytes.size() < *size) {
    throw FrameError(ErrorCode::TruncatedFrame,
                     "frame needs " + std::to_string(*size) + " bytes, have " + std::to_string(bytes.size()), 0);
  }
  const std::uint8_t tag = bytes[4];
  Reader r(bytes.subspan(kHeaderBytes, *size - kHeaderBytes), *size);

  Message msg;
  switch (tag) {
    case static_cast<std::uint8_t>(Tag::Hello):
      msg = Hello{r.u8()};
      break;
    case static_cast<std::uint8_t>(Tag::ListTextures):
      msg = ListTextures{};
      break;
    case static_cast<std::uint8_t>(Tag::TextureList): {
      TextureList list;
      const std::uint16_t count = r.u16();
      list.entries.reserve(count);
      for (std::uint16_t i = 0; i < count; ++i) {
        TextureInfo e;
        e.id = r.u16();
        e.name = r.text();
        e.width_px = r.u16();
        e.height_px = r.u16();
        list.entries.push_back(std::move(e));
      }
      msg = std::move(list);
      break;
    }
    case static_cast<std::uint8_t>(Tag::Select):
      msg = Select{r.u16()};
      break;
    case static_cast<std::uint8_t>(Tag::Contact): {
      Contact c;
      c.t = r.f64();
      c.u = r.f32();
      c.v = r.f32();
      c.depth_mm = r.f32();
      try {
        validate_contact(c);
      } catch (const Error& e) {
        r.finish();
        r.invalid(e.what());
      }
      msg = c;
      break;
    }
    case static_cast<std::uint8_t>(Tag::VibFrame): {
      VibFrame f;
      f.codec = r.u8();
      f.seq = r.u32();
      f.t0 = r.f64();
      f.dt = r.f32();
      const std::uint16_t n = r.u16();
      f.qmin = r.f32();
      f.qmax = r.f32();
      f.q = r.bytes(n);
      if (n == 0) {
        r.finish();
        r.invalid("VIB_FRAME with zero samples");
      }
      msg = std::move(f);
      break;
    }
    case static_cast<std::uint8_t>(Tag::Error): {
      ErrorMessage e;
      e.code = r.u8();
      e.text = r.text();
      msg = std::move(e);
      break;
    }
    case static_cast<std::uint8_t>(Tag::Bye):
      msg = Bye{};
      break;
    default:
      throw FrameError(ErrorCode::UnknownTag, "unknown message tag " + std::to_string(tag), *size);
  }
  r.finish();
  return {std::move(msg), *size};
}

}  // namespace taxelmap::protocol
