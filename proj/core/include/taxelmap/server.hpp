#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "taxelmap/protocol.hpp"
#include "taxelmap/vibmap.hpp"

namespace taxelmap::server {

struct ServerConfig {
  std::filesystem::path texture_dir = "textures";
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = 7878;     // binary protocol; 0 picks an ephemeral port
  std::uint16_t ws_port = 7879;  // JSON mirror over WebSocket; 0 picks an ephemeral port
  double f_out_hz = 1000.0;
  std::size_t frame_size = 64;
  double d_ref_mm = 1.0;
  double carrier_hz = 0.0;  // 0 disables the optional sine carrier

  /// Throws InvalidConfig.
  void validate() const;
};

void to_json(nlohmann::json& j, const ServerConfig& c);
void from_json(const nlohmann::json& j, ServerConfig& c);

struct TextureEntry {
  std::uint16_t id = 0;
  std::string name;
  vibmap::VibrationMap map;
  std::filesystem::path preview;
};

/// Read-only after construction; shared by all sessions.
class TextureStore {
 public:
  TextureStore() = default;

  /// Loads every `*.vibmap` in `dir` (sorted by filename, ids from 1). The
  /// preview is the sibling `.png`, when present.
  static TextureStore load_directory(const std::filesystem::path& dir);

  /// Throws InvalidConfig if the map is not normalized, the id is taken, or
  /// the dimensions do not fit in 16 bits.
  void add(TextureEntry entry);

  const TextureEntry* find(std::uint16_t id) const;
  const std::vector<TextureEntry>& entries() const noexcept { return entries_; }
  protocol::TextureList listing() const;

 private:
  std::vector<TextureEntry> entries_;
};

/// Bilinear lookup at (u (W-1), v (H-1)); exact at grid nodes.
/// Throws UVOutOfRange unless u, v lie in [0, 1].
double lookup_bilinear(const vibmap::VibrationMap& map, double u, double v);

/// lookup_bilinear scaled by min(depth / d_ref, 1); zero depth gives 0.
double contact_intensity(const vibmap::VibrationMap& map, const protocol::Contact& contact, double d_ref_mm);

/// Per-connection protocol state machine, independent of the transport.
///
/// Output samples are generated at f_out on the session clock, which is
/// driven by CONTACT timestamps: a contact at time t first emits every sample
/// k with k / f_out < t using the held intensity, then becomes the new hold
/// value. Samples are grouped into frames of `frame_size`; BYE flushes the
/// partial frame.
class Session {
 public:
  Session(std::shared_ptr<const TextureStore> store, ServerConfig config);

  /// Replies to one client message (frames included, in send order).
  std::vector<protocol::Message> handle(const protocol::Message& msg);

  /// Emits all complete frames for samples before `now`. Throws NoTextureSelected.
  std::vector<protocol::VibFrame> tick(double now);

  /// Encodes any buffered samples as a final partial frame.
  std::vector<protocol::VibFrame> flush();

  bool closed() const noexcept { return closed_; }
  std::optional<std::uint16_t> selected() const noexcept { return selected_; }
  std::uint32_t next_seq() const noexcept { return seq_; }
  std::uint64_t samples_emitted() const noexcept { return emitted_; }

 private:
  double sample_value(std::uint64_t k) const;

  std::shared_ptr<const TextureStore> store_;
  ServerConfig config_;
  std::optional<std::uint16_t> selected_;
  std::optional<protocol::Contact> last_contact_;
  double hold_ = 0.0;
  std::uint64_t next_sample_ = 0;  // out_clock
  std::uint64_t emitted_ = 0;
  std::uint32_t seq_ = 0;
  std::vector<double> pending_;
  bool closed_ = false;
};

/// TCP listener for the binary protocol plus a WebSocket listener for the
/// JSON mirror. Each connection gets its own thread and Session.
class Server {
 public:
  Server(ServerConfig config, std::shared_ptr<const TextureStore> store);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds both ports and starts accepting. Throws ConnectionFailed on bind errors.
  void start();
  void stop();

  std::uint16_t port() const;
  std::uint16_t ws_port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace taxelmap::server
