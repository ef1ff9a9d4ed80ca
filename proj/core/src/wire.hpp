#pragma once

// Blocking frame I/O over an Asio TCP socket.

#include <span>
#include <vector>

#include <boost/asio.hpp>

#include "taxelmap/protocol.hpp"

namespace taxelmap::wire {

namespace asio = boost::asio;
using tcp = asio::ip::tcp;

/// Reads one complete frame, then decodes it. Decode failures therefore leave
/// the stream positioned at the next frame. An oversized length prefix throws
/// FrameError with skip_bytes() == 0 (the stream cannot be resynchronized).
inline protocol::Message read_frame(tcp::socket& socket) {
  std::vector<std::uint8_t> buf(protocol::kHeaderBytes);
  asio::read(socket, asio::buffer(buf));
  const std::size_t size = *protocol::peek_frame_size(buf);
  if (size - protocol::kHeaderBytes > protocol::kMaxPayloadBytes) {
    throw protocol::FrameError(ErrorCode::LengthMismatch, "payload length exceeds limit", 0);
  }
  buf.resize(size);
  if (size > protocol::kHeaderBytes) {
    asio::read(socket, asio::buffer(buf.data() + protocol::kHeaderBytes, size - protocol::kHeaderBytes));
  }
  return protocol::read_message(buf).message;
}

inline void write_frames(tcp::socket& socket, std::span<const protocol::Message> messages) {
  std::vector<std::uint8_t> out;
  for (const auto& m : messages) {
    const auto bytes = protocol::write_message(m);
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
  if (!out.empty()) asio::write(socket, asio::buffer(out));
}

inline void write_frame(tcp::socket& socket, const protocol::Message& message) {
  write_frames(socket, std::span(&message, 1));
}

}  // namespace taxelmap::wire
