#include "taxelmap/server.hpp"

#include <sys/socket.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "wire.hpp"

namespace taxelmap::server {

namespace asio = boost::asio;
namespace beast = boost::beast;
using tcp = asio::ip::tcp;
using protocol::ErrorMessage;
using protocol::ErrorMessageCode;
using protocol::Message;

void ServerConfig::validate() const {
  if (!(std::isfinite(f_out_hz) && f_out_hz > 0.0)) throw Error(ErrorCode::InvalidConfig, "f_out_hz must be > 0");
  if (frame_size < 1 || frame_size > protocol::kMaxFrameSamples) {
    throw Error(ErrorCode::InvalidConfig, "frame_size must be in 1..65535");
  }
  if (!(std::isfinite(d_ref_mm) && d_ref_mm > 0.0)) throw Error(ErrorCode::InvalidConfig, "d_ref_mm must be > 0");
  if (!(std::isfinite(carrier_hz) && carrier_hz >= 0.0)) throw Error(ErrorCode::InvalidConfig, "carrier_hz must be >= 0");
}

void to_json(nlohmann::json& j, const ServerConfig& c) {
  j = nlohmann::json{{"texture_dir", c.texture_dir.string()},
                     {"bind_address", c.bind_address},
                     {"port", c.port},
                     {"ws_port", c.ws_port},
                     {"f_out_hz", c.f_out_hz},
                     {"frame_size", c.frame_size},
                     {"d_ref_mm", c.d_ref_mm},
                     {"carrier_hz", c.carrier_hz}};
}

void from_json(const nlohmann::json& j, ServerConfig& c) {
  const ServerConfig d;
  c.texture_dir = j.value("texture_dir", d.texture_dir.string());
  c.bind_address = j.value("bind_address", d.bind_address);
  c.port = j.value("port", d.port);
  c.ws_port = j.value("ws_port", d.ws_port);
  c.f_out_hz = j.value("f_out_hz", d.f_out_hz);
  c.frame_size = j.value("frame_size", d.frame_size);
  c.d_ref_mm = j.value("d_ref_mm", d.d_ref_mm);
  c.carrier_hz = j.value("carrier_hz", d.carrier_hz);
}

// ---- texture store ----

TextureStore TextureStore::load_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".vibmap") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  TextureStore store;
  std::uint16_t id = 1;
  for (const auto& f : files) {
    TextureEntry e;
    e.id = id++;
    e.name = f.stem().string();
    e.map = vibmap::read_map(f);
    auto preview = f;
    preview.replace_extension(".png");
    if (std::filesystem::exists(preview)) e.preview = preview;
    store.add(std::move(e));
  }
  return store;
}

void TextureStore::add(TextureEntry entry) {
  if (!entry.map.normalized) throw Error(ErrorCode::InvalidConfig, "texture '" + entry.name + "' is not normalized");
  if (find(entry.id)) throw Error(ErrorCode::InvalidConfig, "duplicate texture id " + std::to_string(entry.id));
  constexpr int kMaxDim = std::numeric_limits<std::uint16_t>::max();
  if (entry.map.width_px() < 1 || entry.map.height_px() < 1 || entry.map.width_px() > kMaxDim ||
      entry.map.height_px() > kMaxDim) {
    throw Error(ErrorCode::InvalidConfig, "texture '" + entry.name + "' has unsupported dimensions");
  }
  entries_.push_back(std::move(entry));
}

const TextureEntry* TextureStore::find(std::uint16_t id) const {
  const auto it = std::find_if(entries_.begin(), entries_.end(), [id](const TextureEntry& e) { return e.id == id; });
  return it == entries_.end() ? nullptr : &*it;
}

protocol::TextureList TextureStore::listing() const {
  protocol::TextureList list;
  for (const auto& e : entries_) {
    list.entries.push_back({e.id, e.name, static_cast<std::uint16_t>(e.map.width_px()),
                            static_cast<std::uint16_t>(e.map.height_px())});
  }
  return list;
}

// ---- lookup ----

double lookup_bilinear(const vibmap::VibrationMap& map, double u, double v) {
  if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::UVOutOfRange, "uv (" + std::to_string(u) + ", " + std::to_string(v) + ") outside [0,1]");
  }
  return geometry::sample_bilinear(map.values, u * (map.width_px() - 1), v * (map.height_px() - 1));
}

double contact_intensity(const vibmap::VibrationMap& map, const protocol::Contact& contact, double d_ref_mm) {
  const double value = lookup_bilinear(map, contact.u, contact.v);
  if (!(contact.depth_mm > 0.0F)) return 0.0;
  return value * std::min(static_cast<double>(contact.depth_mm) / d_ref_mm, 1.0);
}

// ---- session ----

namespace {

ErrorMessage error_message(ErrorMessageCode code, const std::string& text) {
  return {static_cast<std::uint8_t>(code), text};
}

ErrorMessageCode to_message_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::UVOutOfRange: return ErrorMessageCode::UVOutOfRange;
    case ErrorCode::NoTextureSelected: return ErrorMessageCode::NoTextureSelected;
    case ErrorCode::UnknownTexture: return ErrorMessageCode::UnknownTexture;
    case ErrorCode::UnknownTag: return ErrorMessageCode::UnknownTag;
    case ErrorCode::LengthMismatch:
    case ErrorCode::TruncatedFrame:
    case ErrorCode::InvalidField:
    case ErrorCode::ParseError: return ErrorMessageCode::MalformedMessage;
    default: return ErrorMessageCode::Internal;
  }
}

}  // namespace

Session::Session(std::shared_ptr<const TextureStore> store, ServerConfig config)
    : store_(std::move(store)), config_(std::move(config)) {
  config_.validate();
  pending_.reserve(config_.frame_size);
}

double Session::sample_value(std::uint64_t k) const {
  double value = hold_;
  if (config_.carrier_hz > 0.0) {
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    const double t = static_cast<double>(k) / config_.f_out_hz;
    value *= 0.5 * (1.0 + std::sin(kTwoPi * config_.carrier_hz * t));
  }
  // Float-representable samples.
  return static_cast<double>(static_cast<float>(value));
}

std::vector<protocol::VibFrame> Session::tick(double now) {
  if (!selected_) throw Error(ErrorCode::NoTextureSelected, "select a texture first");
  std::vector<protocol::VibFrame> frames;
  const float dt = static_cast<float>(1.0 / config_.f_out_hz);
  while (static_cast<double>(next_sample_) / config_.f_out_hz < now) {
    pending_.push_back(sample_value(next_sample_));
    ++next_sample_;
    if (pending_.size() == config_.frame_size) {
      const std::uint64_t first = next_sample_ - pending_.size();
      frames.push_back(protocol::encode_frame(pending_, seq_++, static_cast<double>(first) / config_.f_out_hz, dt));
      emitted_ += pending_.size();
      pending_.clear();
    }
  }
  return frames;
}

std::vector<protocol::VibFrame> Session::flush() {
  std::vector<protocol::VibFrame> frames;
  if (pending_.empty()) return frames;
  const std::uint64_t first = next_sample_ - pending_.size();
  frames.push_back(protocol::encode_frame(pending_, seq_++, static_cast<double>(first) / config_.f_out_hz,
                                          static_cast<float>(1.0 / config_.f_out_hz)));
  emitted_ += pending_.size();
  pending_.clear();
  return frames;
}

std::vector<Message> Session::handle(const Message& msg) {
  std::vector<Message> out;
  try {
    std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, protocol::Hello>) {
            if (m.version != protocol::kProtocolVersion) {
              out.emplace_back(error_message(ErrorMessageCode::VersionMismatch,
                                             "server speaks protocol version " +
                                                 std::to_string(protocol::kProtocolVersion)));
            } else {
              out.emplace_back(protocol::Hello{protocol::kProtocolVersion});
            }
          } else if constexpr (std::is_same_v<M, protocol::ListTextures>) {
            out.emplace_back(store_->listing());
          } else if constexpr (std::is_same_v<M, protocol::Select>) {
            if (!store_->find(m.id)) throw Error(ErrorCode::UnknownTexture, "no texture with id " + std::to_string(m.id));
            selected_ = m.id;
            out.emplace_back(protocol::Select{m.id});
          } else if constexpr (std::is_same_v<M, protocol::Contact>) {
            if (!selected_) throw Error(ErrorCode::NoTextureSelected, "select a texture first");
            const auto& map = store_->find(*selected_)->map;
            const double intensity = contact_intensity(map, m, config_.d_ref_mm);
            for (auto& f : tick(m.t)) out.emplace_back(std::move(f));
            hold_ = intensity;
            last_contact_ = m;
          } else if constexpr (std::is_same_v<M, protocol::Bye>) {
            for (auto& f : flush()) out.emplace_back(std::move(f));
            out.emplace_back(protocol::Bye{});
            closed_ = true;
          } else {
            out.emplace_back(error_message(ErrorMessageCode::MalformedMessage,
                                           std::string("unexpected client message ") +
                                               protocol::type_name(protocol::tag_of(msg))));
          }
        },
        msg);
  } catch (const Error& e) {
    out.emplace_back(error_message(to_message_code(e.code()), e.what()));
  }
  return out;
}

// ---- network server ----

struct Server::Impl {
  ServerConfig config;
  std::shared_ptr<const TextureStore> store;
  asio::io_context io;
  tcp::acceptor tcp_acceptor{io};
  tcp::acceptor ws_acceptor{io};
  std::thread io_thread;

  std::mutex mu;
  std::set<int> live_fds;
  std::vector<std::thread> workers;
  bool running = false;
  std::uint16_t bound_port = 0;
  std::uint16_t bound_ws_port = 0;

  Impl(ServerConfig c, std::shared_ptr<const TextureStore> s) : config(std::move(c)), store(std::move(s)) {}

  void open(tcp::acceptor& acceptor, std::uint16_t port) {
    boost::system::error_code ec;
    const auto address = asio::ip::make_address(config.bind_address, ec);
    if (ec) throw Error(ErrorCode::ConnectionFailed, "bad bind address " + config.bind_address);
    const tcp::endpoint ep(address, port);
    acceptor.open(ep.protocol(), ec);
    if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(ep, ec);
    if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) throw Error(ErrorCode::ConnectionFailed, "cannot listen on port " + std::to_string(port) + ": " + ec.message());
  }

  void accept_next(tcp::acceptor& acceptor, bool websocket) {
    acceptor.async_accept([this, &acceptor, websocket](boost::system::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      {
        std::lock_guard lock(mu);
        if (!running) return;
        const int fd = socket.native_handle();
        live_fds.insert(fd);
        workers.emplace_back([this, websocket, fd, s = std::move(socket)]() mutable {
          try {
            if (websocket) {
              serve_websocket(std::move(s));
            } else {
              serve_binary(s);
            }
          } catch (const std::exception& e) {
            std::cerr << "session ended: " << e.what() << '\n';
          }
          std::lock_guard lock(mu);
          live_fds.erase(fd);
        });
      }
      accept_next(acceptor, websocket);
    });
  }

  void serve_binary(tcp::socket& socket) {
    socket.set_option(tcp::no_delay(true));
    Session session(store, config);
    while (!session.closed()) {
      Message msg;
      try {
        msg = wire::read_frame(socket);
      } catch (const protocol::FrameError& e) {
        wire::write_frame(socket, error_message(to_message_code(e.code()), e.what()));
        if (e.skip_bytes() == 0) return;
        continue;
      } catch (const boost::system::system_error&) {
        return;  // peer went away
      }
      const auto replies = session.handle(msg);
      wire::write_frames(socket, replies);
    }
    boost::system::error_code ignored;
    socket.shutdown(tcp::socket::shutdown_both, ignored);
  }

  void serve_websocket(tcp::socket socket) {
    beast::websocket::stream<tcp::socket> ws(std::move(socket));
    ws.accept();
    Session session(store, config);
    while (!session.closed()) {
      beast::flat_buffer buffer;
      try {
        ws.read(buffer);
      } catch (const boost::system::system_error&) {
        return;
      }
      std::vector<Message> replies;
      try {
        const auto j = nlohmann::json::parse(beast::buffers_to_string(buffer.data()));
        replies = session.handle(protocol::from_json_message(j));
      } catch (const Error& e) {
        replies.emplace_back(error_message(to_message_code(e.code()), e.what()));
      } catch (const nlohmann::json::exception& e) {
        replies.emplace_back(error_message(ErrorMessageCode::MalformedMessage, e.what()));
      }
      ws.text(true);
      for (const auto& r : replies) ws.write(asio::buffer(protocol::to_json_message(r).dump()));
    }
    boost::system::error_code ignored;
    ws.close(beast::websocket::close_code::normal, ignored);
  }
};

Server::Server(ServerConfig config, std::shared_ptr<const TextureStore> store)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(store))) {
  impl_->config.validate();
}

Server::~Server() { stop(); }

void Server::start() {
  if (impl_->running) return;
  impl_->open(impl_->tcp_acceptor, impl_->config.port);
  impl_->open(impl_->ws_acceptor, impl_->config.ws_port);
  impl_->bound_port = impl_->tcp_acceptor.local_endpoint().port();
  impl_->bound_ws_port = impl_->ws_acceptor.local_endpoint().port();
  impl_->running = true;
  impl_->accept_next(impl_->tcp_acceptor, false);
  impl_->accept_next(impl_->ws_acceptor, true);
  impl_->io_thread = std::thread([this] { impl_->io.run(); });
}

void Server::stop() {
  if (!impl_) return;
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(impl_->mu);
    if (!impl_->running) return;
    impl_->running = false;
    for (int fd : impl_->live_fds) ::shutdown(fd, SHUT_RDWR);
    workers.swap(impl_->workers);
  }
  impl_->io.stop();
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
  boost::system::error_code ignored;
  impl_->tcp_acceptor.close(ignored);
  impl_->ws_acceptor.close(ignored);
  for (auto& t : workers) t.join();
}

std::uint16_t Server::port() const { return impl_->bound_port; }
std::uint16_t Server::ws_port() const { return impl_->bound_ws_port; }

}  // namespace taxelmap::server
