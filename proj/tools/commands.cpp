#include "commands.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "taxelmap/client.hpp"
#include "taxelmap/geometry.hpp"
#include "taxelmap/pipeline.hpp"
#include "taxelmap/scansim.hpp"
#include "taxelmap/server.hpp"
#include "taxelmap/vibmap.hpp"

namespace taxelmap::cli {

namespace fs = std::filesystem;

std::atomic<bool>& stop_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

namespace {

/// Distinguishes bad configuration (exit 2) from runtime failures (exit 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json load_config_json(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    auto j = nlohmann::json::parse(in);
    if (!j.is_object()) throw ConfigError(path + ": top level must be an object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

pipeline::PipelineConfig load_pipeline_config(const std::string& path) {
  if (path.empty()) return {};
  try {
    return pipeline::read_config(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

std::pair<std::string, std::uint16_t> parse_host_port(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) throw ConfigError("expected HOST:PORT, got '" + text + "'");
  unsigned value = 0;
  const char* first = text.data() + colon + 1;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || value == 0 || value > 65535) {
    throw ConfigError("bad port in '" + text + "'");
  }
  return {text.substr(0, colon), static_cast<std::uint16_t>(value)};
}

geometry::Quad parse_quad(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double d = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), d);
    if (ec != std::errc{} || ptr != item.data() + item.size()) throw ConfigError("bad number in --rectify: " + item);
    v.push_back(d);
  }
  if (v.size() != 8) throw ConfigError("--rectify needs 8 comma-separated values (u,v for TL,TR,BR,BL)");
  geometry::Quad q;
  for (int i = 0; i < 4; ++i) q.corners[i] = {v[2 * i], v[2 * i + 1]};
  return q;
}

void write_taxels(const std::vector<vibmap::TaxelLane>& lanes, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "x_mm,y_mm,value,count\n";
  char buf[64];
  for (const auto& lane : lanes) {
    for (std::size_t k = 0; k < lane.values.size(); ++k) {
      if (lane.counts[k] == 0) continue;
      out << lane.x_mm << ',' << lane.center_y_mm(k) << ',';
      auto r = std::to_chars(buf, buf + sizeof buf, lane.values[k]);
      out.write(buf, r.ptr - buf);
      out << ',' << lane.counts[k] << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"taxelmap: vibration map builder and vibrotactile streaming server", "taxelmap"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  std::string config_path;
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a raster-scan session into a directory");
  std::string sim_out;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--out", sim_out, "Session output directory")->required();
  sim->add_option("--seed", sim_seed, "Override scan.seed");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Estimate the world-to-pixel projection");
  std::string cal_points, cal_out;
  cal->add_option("--points", cal_points, "Correspondence CSV (x_mm,y_mm,u_px,v_px)")->required()->check(CLI::ExistingFile);
  cal->add_option("--out", cal_out, "Projection JSON output")->required();

  // buildmap
  auto* build = app.add_subcommand("buildmap", "Build a vibration map from a session");
  std::string b_session, b_projection, b_out, b_png, b_taxels, b_rectify;
  int b_fill = 0;
  build->add_option("--session", b_session, "Session directory")->required()->check(CLI::ExistingDirectory);
  build->add_option("--projection", b_projection, "Projection JSON from calibrate")->required()->check(CLI::ExistingFile);
  build->add_option("--out", b_out, ".vibmap output")->required();
  build->add_option("--png", b_png, "Preview PNG (default: --out with .png)");
  build->add_option("--taxels", b_taxels, "Optional CSV of raw taxel values");
  build->add_option("--preview-fill", b_fill, "Fill preview gaps up to N px along rows")->check(CLI::NonNegativeNumber);
  build->add_option("--rectify", b_rectify, "Rectify by image quad u,v x4 (TL,TR,BR,BL)");

  // stats
  auto* stats = app.add_subcommand("stats", "Print v_scale,v_mean,v_std of a map");
  std::string s_map, s_out;
  stats->add_option("--map", s_map, ".vibmap input")->required()->check(CLI::ExistingFile);
  stats->add_option("--out", s_out, "CSV output (default: stdout)");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve vibration maps over TCP and WebSocket");
  std::optional<std::string> v_dir, v_bind;
  std::optional<std::uint16_t> v_port, v_ws_port;
  std::optional<double> v_f_out, v_d_ref, v_carrier, v_duration;
  std::optional<std::size_t> v_frame;
  serve->add_option("--texture-dir", v_dir, "Directory of .vibmap files");
  serve->add_option("--bind", v_bind, "Bind address");
  serve->add_option("--port", v_port, "Binary protocol port (0 = ephemeral)");
  serve->add_option("--ws-port", v_ws_port, "WebSocket JSON port (0 = ephemeral)");
  serve->add_option("--f-out", v_f_out, "Output sample rate (Hz)");
  serve->add_option("--frame-size", v_frame, "Samples per VIB_FRAME");
  serve->add_option("--d-ref", v_d_ref, "Depth at which intensity saturates (mm)");
  serve->add_option("--carrier", v_carrier, "Sine carrier frequency (Hz, 0 = off)");
  serve->add_option("--duration", v_duration, "Exit after this many seconds");

  // replay
  auto* rep = app.add_subcommand("replay", "Replay a contact script against a server");
  std::string r_server, r_script, r_out, r_svg;
  std::uint16_t r_texture = 0;
  bool r_accel = false;
  std::optional<double> r_end;
  rep->add_option("--server", r_server, "HOST:PORT")->required();
  rep->add_option("--texture", r_texture, "Texture id")->required();
  rep->add_option("--script", r_script, "Script CSV (t,u,v,depth_mm)")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", r_out, "Trace CSV output")->required();
  rep->add_flag("--accelerated", r_accel, "Send contacts without wall-clock pacing");
  rep->add_option("--svg", r_svg, "Optional SVG plot of the trace");
  rep->add_option("--end-time", r_end, "Session end time (default: last script row)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (sim->parsed()) {
      auto cfg = load_pipeline_config(config_path);
      if (sim_seed) cfg.scan.seed = *sim_seed;
      try {
        cfg.scan.validate();
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      const auto session = scansim::simulate_session(cfg.field, cfg.scan);
      scansim::write_session(session, sim_out);
      err << "simulated " << session.passes.size() << " passes into " << sim_out << "\n";
    } else if (cal->parsed()) {
      const auto points = geometry::read_correspondences(cal_points);
      const auto result = geometry::calibrate_planar(points);
      pipeline::write_projection(result, cal_out);
      err << "calibrated from " << points.size() << " points, rmse " << result.rmse_px << " px\n";
    } else if (build->parsed()) {
      const auto cfg = load_pipeline_config(config_path);
      std::optional<geometry::Quad> quad;
      if (!b_rectify.empty()) quad = parse_quad(b_rectify);
      const auto session = scansim::read_session(b_session);
      const auto calib = pipeline::read_projection(b_projection);
      auto result = pipeline::build_map(session, calib.projection, cfg.map);
      for (const auto& p : result.passes) {
        if (p.rejected) {
          err << "warning: pass " << p.index << " (lane " << p.lane_index << ") rejected: " << p.reason << "\n";
        } else {
          err << "pass " << p.index << " (lane " << p.lane_index << "): fit rmse " << p.fit_rmse_mm << " mm, "
              << p.samples << " samples\n";
        }
      }
      err << "rejected passes: " << result.rejected_count() << " of " << result.passes.size() << "\n";

      auto map = result.normalized;
      if (quad) {
        map = vibmap::warp_map(map, *quad, map.width_px(), map.height_px());
      }
      vibmap::write_map(map, b_out);
      const fs::path png = b_png.empty() ? fs::path(b_out).replace_extension(".png") : fs::path(b_png);
      const auto preview = b_fill > 0 ? vibmap::fill_lane_gaps(map, b_fill) : map.values;
      vibmap::write_png(vibmap::preview_pixels(preview), png);
      if (!b_taxels.empty()) write_taxels(result.lanes, b_taxels);
    } else if (stats->parsed()) {
      const auto map = vibmap::read_map(s_map);
      const std::string text =
          std::string(vibmap::kStatsCsvHeader) + "\n" + vibmap::format_stats_csv(vibmap::map_stats(map)) + "\n";
      if (s_out.empty()) {
        out << text;
      } else {
        std::ofstream f(s_out, std::ios::binary);
        if (!(f << text)) throw Error(ErrorCode::IoError, "cannot write " + s_out);
      }
    } else if (serve->parsed()) {
      server::ServerConfig sc;
      try {
        const auto j = load_config_json(config_path);
        if (j.contains("server")) sc = j.at("server").get<server::ServerConfig>();
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("server config: ") + e.what());
      }
      if (v_dir) sc.texture_dir = *v_dir;
      if (v_bind) sc.bind_address = *v_bind;
      if (v_port) sc.port = *v_port;
      if (v_ws_port) sc.ws_port = *v_ws_port;
      if (v_f_out) sc.f_out_hz = *v_f_out;
      if (v_frame) sc.frame_size = *v_frame;
      if (v_d_ref) sc.d_ref_mm = *v_d_ref;
      if (v_carrier) sc.carrier_hz = *v_carrier;
      try {
        sc.validate();
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      auto store = std::make_shared<const server::TextureStore>(server::TextureStore::load_directory(sc.texture_dir));
      server::Server srv(sc, store);
      srv.start();
      err << "serving " << store->entries().size() << " textures on " << sc.bind_address << ":" << srv.port()
          << " (ws " << srv.ws_port() << ")" << std::endl;
      const auto deadline = v_duration ? std::chrono::steady_clock::now() + std::chrono::duration<double>(*v_duration)
                                       : std::chrono::steady_clock::time_point::max();
      while (!stop_flag() && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
      srv.stop();
    } else if (rep->parsed()) {
      const auto [host, port] = parse_host_port(r_server);
      client::TrajectoryScript script;
      try {
        script = client::read_script(r_script);
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      client::ReplayOptions opts;
      opts.accelerated = r_accel;
      opts.end_time = r_end;
      const auto trace = client::replay(script, host, port, r_texture, opts);
      client::export_trace(trace, r_out);
      if (!r_svg.empty()) client::export_trace_svg(trace, r_svg);
      err << "received " << trace.points.size() << " samples\n";
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace taxelmap::cli
