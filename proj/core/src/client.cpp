#include "taxelmap/client.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "csv.hpp"
#include "wire.hpp"

namespace taxelmap::client {

namespace asio = boost::asio;
using tcp = asio::ip::tcp;
using protocol::Message;

void TrajectoryScript::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::string where = "script row " + std::to_string(i) + ": ";
    if (!std::isfinite(r.t) || r.t < 0.0) throw Error(ErrorCode::InvalidConfig, where + "t must be finite and >= 0");
    if (i > 0 && !(r.t > rows[i - 1].t)) throw Error(ErrorCode::InvalidConfig, where + "t must strictly increase");
    if (!(r.u >= 0.0 && r.u <= 1.0 && r.v >= 0.0 && r.v <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig, where + "u, v must lie in [0, 1]");
    }
    if (!(r.depth_mm >= 0.0) || !std::isfinite(r.depth_mm)) {
      throw Error(ErrorCode::InvalidConfig, where + "depth_mm must be >= 0");
    }
  }
}

namespace {

Message expect_reply(tcp::socket& socket) {
  Message reply = wire::read_frame(socket);
  if (const auto* err = std::get_if<protocol::ErrorMessage>(&reply)) throw RemoteError(err->code, err->text);
  return reply;
}

template <typename T>
T expect(tcp::socket& socket, const char* what) {
  Message reply = expect_reply(socket);
  if (auto* m = std::get_if<T>(&reply)) return std::move(*m);
  throw Error(ErrorCode::ProtocolError, std::string("expected ") + what + ", got " +
                                            protocol::type_name(protocol::tag_of(reply)));
}

}  // namespace

Trace frames_to_trace(const std::vector<protocol::VibFrame>& frames) {
  Trace trace;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& f = frames[k];
    if (f.seq != k) {
      throw Error(ErrorCode::ProtocolError,
                  "frame sequence gap: expected " + std::to_string(k) + ", got " + std::to_string(f.seq));
    }
    const auto samples = protocol::decode_frame(f);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      trace.points.push_back({f.t0 + static_cast<double>(i) * f.dt, samples[i]});
    }
  }
  return trace;
}

ReplayResult replay_frames(const TrajectoryScript& script, const std::string& host, std::uint16_t port,
                           std::uint16_t texture_id, const ReplayOptions& options) {
  script.validate();
  asio::io_context io;
  tcp::socket socket(io);
  try {
    tcp::resolver resolver(io);
    asio::connect(socket, resolver.resolve(host, std::to_string(port)));
    socket.set_option(tcp::no_delay(true));
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::ConnectionFailed, host + ":" + std::to_string(port) + ": " + e.what());
  }

  ReplayResult result;
  try {
    wire::write_frame(socket, protocol::Hello{protocol::kProtocolVersion});
    expect<protocol::Hello>(socket, "HELLO");

    wire::write_frame(socket, protocol::ListTextures{});
    const auto listing = expect<protocol::TextureList>(socket, "TEXTURE_LIST");
    const bool known = std::any_of(listing.entries.begin(), listing.entries.end(),
                                   [texture_id](const protocol::TextureInfo& e) { return e.id == texture_id; });
    if (!known) throw Error(ErrorCode::UnknownTexture, "server has no texture " + std::to_string(texture_id));

    wire::write_frame(socket, protocol::Select{texture_id});
    expect<protocol::Select>(socket, "SELECT");

    // Receiver runs until the server's BYE; the sender paces the script.
    std::exception_ptr receive_error;
    std::thread receiver([&] {
      try {
        while (true) {
          Message msg = expect_reply(socket);
          if (std::holds_alternative<protocol::Bye>(msg)) break;
          if (auto* f = std::get_if<protocol::VibFrame>(&msg)) {
            result.frames.push_back(std::move(*f));
          } else {
            throw Error(ErrorCode::ProtocolError, std::string("unexpected ") + protocol::type_name(protocol::tag_of(msg)));
          }
        }
      } catch (...) {
        receive_error = std::current_exception();
        boost::system::error_code ignored;
        socket.shutdown(tcp::socket::shutdown_receive, ignored);
      }
    });

    try {
      const auto start = std::chrono::steady_clock::now();
      auto pace = [&](double t) {
        if (!options.accelerated) std::this_thread::sleep_until(start + std::chrono::duration<double>(t));
      };
      for (const auto& row : script.rows) {
        pace(row.t);
        wire::write_frame(socket, protocol::Contact{row.t, static_cast<float>(row.u), static_cast<float>(row.v),
                                                    static_cast<float>(row.depth_mm)});
      }
      const double end = options.end_time.value_or(script.rows.empty() ? 0.0 : script.rows.back().t);
      pace(end);
      wire::write_frame(socket, protocol::Contact{end, 0.0F, 0.0F, 0.0F});
      wire::write_frame(socket, protocol::Bye{});
    } catch (const boost::system::system_error&) {
      // The receiver reports the underlying failure.
    }
    receiver.join();
    if (receive_error) std::rethrow_exception(receive_error);
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::ConnectionFailed, std::string("connection lost: ") + e.what());
  } catch (const protocol::FrameError& e) {
    throw Error(ErrorCode::ProtocolError, e.what());
  }
  result.trace = frames_to_trace(result.frames);
  return result;
}

Trace replay(const TrajectoryScript& script, const std::string& host, std::uint16_t port, std::uint16_t texture_id,
             const ReplayOptions& options) {
  return replay_frames(script, host, port, texture_id, options).trace;
}

TrajectoryScript read_script(const std::filesystem::path& path) {
  TrajectoryScript script;
  for (const auto& r : detail::read_numeric_csv(path, "t,u,v,depth_mm")) script.rows.push_back({r[0], r[1], r[2], r[3]});
  script.validate();
  return script;
}

void write_script(const TrajectoryScript& script, const std::filesystem::path& path) {
  std::string text = "t,u,v,depth_mm\n";
  for (const auto& r : script.rows) {
    text += detail::format_exact(r.t) + ',' + detail::format_exact(r.u) + ',' + detail::format_exact(r.v) + ',' +
            detail::format_exact(r.depth_mm) + '\n';
  }
  detail::write_text_file(path, text);
}

void export_trace(const Trace& trace, const std::filesystem::path& path) {
  std::string text = "t,intensity\n";
  for (const auto& p : trace.points) text += detail::format_fixed(p.t, 6) + ',' + detail::format_fixed(p.intensity, 6) + '\n';
  detail::write_text_file(path, text);
}

Trace read_trace(const std::filesystem::path& path) {
  Trace trace;
  for (const auto& r : detail::read_numeric_csv(path, "t,intensity")) trace.points.push_back({r[0], r[1]});
  return trace;
}

void export_trace_svg(const Trace& trace, const std::filesystem::path& path) {
  constexpr double kWidth = 800.0, kHeight = 300.0, kMargin = 40.0;
  const double t0 = trace.points.empty() ? 0.0 : trace.points.front().t;
  const double t1 = trace.points.empty() ? 1.0 : std::max(trace.points.back().t, t0 + 1e-9);
  const double plot_w = kWidth - 2 * kMargin, plot_h = kHeight - 2 * kMargin;

  std::string points;
  for (const auto& p : trace.points) {
    const double x = kMargin + (p.t - t0) / (t1 - t0) * plot_w;
    const double y = kMargin + plot_h * (1.0 - std::clamp(p.intensity, 0.0, kTracePlotMax) / kTracePlotMax);
    points += detail::format_fixed(x, 2) + ',' + detail::format_fixed(y, 2) + ' ';
  }
  const std::string y_max = detail::format_fixed(kTracePlotMax, 1);
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"300\" viewBox=\"0 0 800 300\" "
         "data-y-min=\"0\" data-y-max=\"" + y_max + "\">\n";
  svg += "  <rect x=\"0\" y=\"0\" width=\"800\" height=\"300\" fill=\"white\"/>\n";
  svg += "  <line x1=\"40\" y1=\"260\" x2=\"760\" y2=\"260\" stroke=\"black\"/>\n";
  svg += "  <line x1=\"40\" y1=\"40\" x2=\"40\" y2=\"260\" stroke=\"black\"/>\n";
  svg += "  <text x=\"34\" y=\"44\" text-anchor=\"end\" font-size=\"10\">" + y_max + "</text>\n";
  svg += "  <text x=\"34\" y=\"264\" text-anchor=\"end\" font-size=\"10\">0</text>\n";
  svg += "  <text x=\"400\" y=\"290\" text-anchor=\"middle\" font-size=\"10\">t (s): " + detail::format_fixed(t0, 3) +
         " .. " + detail::format_fixed(t1, 3) + "</text>\n";
  svg += "  <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"" + points + "\"/>\n";
  svg += "</svg>\n";
  detail::write_text_file(path, svg);
}

}  // namespace taxelmap::client
