#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "taxelmap/error.hpp"
#include "taxelmap/protocol.hpp"

namespace taxelmap::client {

struct ScriptRow {
  double t = 0.0;
  double u = 0.0;
  double v = 0.0;
  double depth_mm = 0.0;
};

/// Scripted contact trajectory; t strictly increasing, u, v in [0, 1].
struct TrajectoryScript {
  std::vector<ScriptRow> rows;

  /// Throws InvalidConfig on the first violated invariant.
  void validate() const;
};

struct TracePoint {
  double t = 0.0;
  double intensity = 0.0;
};

struct Trace {
  std::vector<TracePoint> points;
};

/// Raised when the server answers with ERROR; remote_code() is its code byte.
class RemoteError : public Error {
 public:
  RemoteError(std::uint8_t remote_code, const std::string& text)
      : Error(ErrorCode::ProtocolError, "server error " + std::to_string(remote_code) + ": " + text),
        remote_code_(remote_code) {}
  std::uint8_t remote_code() const noexcept { return remote_code_; }

 private:
  std::uint8_t remote_code_;
};

struct ReplayOptions {
  /// Send contacts back-to-back instead of pacing them on the wall clock.
  bool accelerated = false;
  /// Session end time; defaults to the last script row (0 for an empty script).
  std::optional<double> end_time;
};

struct ReplayResult {
  Trace trace;
  std::vector<protocol::VibFrame> frames;
};

/// HELLO / LIST_TEXTURES / SELECT, then streams the script as CONTACT events
/// followed by a depth-0 contact at the end time and BYE, decoding every
/// VIB_FRAME received until the server's BYE.
/// Throws ConnectionFailed, UnknownTexture, or RemoteError / ProtocolError.
ReplayResult replay_frames(const TrajectoryScript& script, const std::string& host, std::uint16_t port,
                           std::uint16_t texture_id, const ReplayOptions& options = {});

Trace replay(const TrajectoryScript& script, const std::string& host, std::uint16_t port, std::uint16_t texture_id,
             const ReplayOptions& options = {});

/// Concatenates decoded frames; t = t0 + i * dt. Throws ProtocolError when
/// sequence numbers are not gapless from 0.
Trace frames_to_trace(const std::vector<protocol::VibFrame>& frames);

/// Script CSV header `t,u,v,depth_mm`.
TrajectoryScript read_script(const std::filesystem::path& path);
void write_script(const TrajectoryScript& script, const std::filesystem::path& path);

/// CSV `t,intensity`, six decimals.
void export_trace(const Trace& trace, const std::filesystem::path& path);
Trace read_trace(const std::filesystem::path& path);

inline constexpr double kTracePlotMax = 0.8;
/// Time-vs-intensity polyline; the y axis spans [0, 0.8] and values above are clamped.
void export_trace_svg(const Trace& trace, const std::filesystem::path& path);

}  // namespace taxelmap::client
