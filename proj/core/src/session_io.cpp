#include <string>

#include "csv.hpp"
#include "taxelmap/scansim.hpp"

namespace taxelmap::scansim {
namespace {

constexpr const char* kSessionFormat = "taxelmap-session/1";

template <typename T>
T field_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::string direction_name(Direction d) { return d == Direction::PositiveY ? "+Y" : "-Y"; }

Direction parse_direction(const std::string& s) {
  if (s == "+Y") return Direction::PositiveY;
  if (s == "-Y") return Direction::NegativeY;
  throw Error(ErrorCode::ParseError, "unknown direction '" + s + "'");
}

}  // namespace

void to_json(nlohmann::json& j, const ScanConfig& c) {
  j = nlohmann::json{{"x_origin_mm", c.x_origin_mm},
                     {"y_start_mm", c.y_start_mm},
                     {"y_len_mm", c.y_len_mm},
                     {"lanes", c.lanes},
                     {"lane_pitch_mm", c.lane_pitch_mm},
                     {"passes_per_lane", c.passes_per_lane},
                     {"cruise_speed_mm_s", c.cruise_speed_mm_s},
                     {"accel_mm_s2", c.accel_mm_s2},
                     {"robot_rate_hz", c.robot_rate_hz},
                     {"accel_rate_hz", c.accel_rate_hz},
                     {"clock_offset_s", c.clock_offset_s},
                     {"noise_sigma_g", c.noise_sigma_g},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ScanConfig& c) {
  const ScanConfig d;
  c.x_origin_mm = field_or(j, "x_origin_mm", d.x_origin_mm);
  c.y_start_mm = field_or(j, "y_start_mm", d.y_start_mm);
  c.y_len_mm = field_or(j, "y_len_mm", d.y_len_mm);
  c.lanes = field_or(j, "lanes", d.lanes);
  c.lane_pitch_mm = field_or(j, "lane_pitch_mm", d.lane_pitch_mm);
  c.passes_per_lane = field_or(j, "passes_per_lane", d.passes_per_lane);
  c.cruise_speed_mm_s = field_or(j, "cruise_speed_mm_s", d.cruise_speed_mm_s);
  c.accel_mm_s2 = field_or(j, "accel_mm_s2", d.accel_mm_s2);
  c.robot_rate_hz = field_or(j, "robot_rate_hz", d.robot_rate_hz);
  c.accel_rate_hz = field_or(j, "accel_rate_hz", d.accel_rate_hz);
  c.clock_offset_s = field_or(j, "clock_offset_s", d.clock_offset_s);
  c.noise_sigma_g = field_or(j, "noise_sigma_g", d.noise_sigma_g);
  c.seed = field_or(j, "seed", d.seed);
}

void to_json(nlohmann::json& j, const IntensityField& field) {
  std::visit(
      [&j](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, ConstantField>) {
          j = {{"type", "constant"}, {"value", f.value}};
        } else if constexpr (std::is_same_v<F, CheckerboardField>) {
          j = {{"type", "checkerboard"}, {"period_mm", f.period_mm}, {"lo", f.lo}, {"hi", f.hi},
               {"origin_x_mm", f.origin_x_mm}, {"origin_y_mm", f.origin_y_mm}};
        } else if constexpr (std::is_same_v<F, SinusoidField>) {
          j = {{"type", "sinusoid"}, {"period_mm", f.period_mm}, {"amplitude", f.amplitude}};
        } else {
          j = {{"type", "step_edge"}, {"axis", f.axis == StepEdgeField::Axis::X ? "x" : "y"},
               {"edge_mm", f.edge_mm}, {"lo", f.lo}, {"hi", f.hi}};
        }
      },
      field.variant());
}

void from_json(const nlohmann::json& j, IntensityField& field) {
  const auto type = j.at("type").get<std::string>();
  if (type == "constant") {
    field = IntensityField(ConstantField{j.at("value").get<double>()});
  } else if (type == "checkerboard") {
    const CheckerboardField d;
    field = IntensityField(CheckerboardField{field_or(j, "period_mm", d.period_mm), field_or(j, "lo", d.lo),
                                             field_or(j, "hi", d.hi), field_or(j, "origin_x_mm", d.origin_x_mm),
                                             field_or(j, "origin_y_mm", d.origin_y_mm)});
  } else if (type == "sinusoid") {
    const SinusoidField d;
    field = IntensityField(SinusoidField{field_or(j, "period_mm", d.period_mm), field_or(j, "amplitude", d.amplitude)});
  } else if (type == "step_edge") {
    const StepEdgeField d;
    const auto axis = field_or<std::string>(j, "axis", "y");
    if (axis != "x" && axis != "y") throw Error(ErrorCode::InvalidConfig, "step_edge axis must be x or y");
    field = IntensityField(StepEdgeField{axis == "x" ? StepEdgeField::Axis::X : StepEdgeField::Axis::Y,
                                         field_or(j, "edge_mm", d.edge_mm), field_or(j, "lo", d.lo),
                                         field_or(j, "hi", d.hi)});
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown field type '" + type + "'");
  }
}

void write_session(const ScanSession& session, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json manifest = nlohmann::json::array();
  for (std::size_t k = 0; k < session.passes.size(); ++k) {
    const auto& pass = session.passes[k];
    const std::string robot_file = "robot_" + std::to_string(k) + ".csv";
    const std::string accel_file = "accel_" + std::to_string(k) + ".csv";

    std::string robot = "t,x_mm,y_mm\n";
    for (const auto& s : pass.robot) {
      robot += detail::format_exact(s.t) + ',' + detail::format_exact(s.x_mm) + ',' + detail::format_exact(s.y_mm) + '\n';
    }
    detail::write_text_file(dir / robot_file, robot);

    std::string accel = "t,acc_g\n";
    for (const auto& s : pass.accel) {
      accel += detail::format_exact(s.t) + ',' + detail::format_exact(s.acc_g) + '\n';
    }
    detail::write_text_file(dir / accel_file, accel);

    manifest.push_back({{"index", k},
                        {"lane_index", pass.lane_index},
                        {"pass_index", pass.pass_index},
                        {"x_mm", pass.x_mm},
                        {"direction", direction_name(pass.direction)},
                        {"start_time_s", pass.start_time_s},
                        {"robot_file", robot_file},
                        {"accel_file", accel_file},
                        {"robot_samples", pass.robot.size()},
                        {"accel_samples", pass.accel.size()}});
  }
  const nlohmann::json doc{{"format", kSessionFormat}, {"config", session.config}, {"passes", manifest}};
  detail::write_text_file(dir / "session.json", doc.dump(2) + "\n");
}

ScanSession read_session(const std::filesystem::path& dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_text_file(dir / "session.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, (dir / "session.json").string() + ": " + e.what());
  }
  try {
    if (doc.value("format", std::string{}) != kSessionFormat) {
      throw Error(ErrorCode::ParseError, "unsupported session format");
    }
    ScanSession session;
    session.config = doc.at("config").get<ScanConfig>();
    for (const auto& entry : doc.at("passes")) {
      ScanPass pass;
      pass.lane_index = entry.at("lane_index").get<int>();
      pass.pass_index = entry.at("pass_index").get<int>();
      pass.x_mm = entry.at("x_mm").get<double>();
      pass.direction = parse_direction(entry.at("direction").get<std::string>());
      pass.start_time_s = entry.at("start_time_s").get<double>();

      for (const auto& r : detail::read_numeric_csv(dir / entry.at("robot_file").get<std::string>(), "t,x_mm,y_mm")) {
        pass.robot.push_back({r[0], r[1], r[2]});
      }
      for (const auto& r : detail::read_numeric_csv(dir / entry.at("accel_file").get<std::string>(), "t,acc_g")) {
        pass.accel.push_back({r[0], r[1]});
      }
      if (pass.robot.size() != entry.at("robot_samples").get<std::size_t>() ||
          pass.accel.size() != entry.at("accel_samples").get<std::size_t>()) {
        throw Error(ErrorCode::ParseError, "sample count mismatch in pass " + std::to_string(session.passes.size()));
      }
      session.passes.push_back(std::move(pass));
    }
    return session;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, (dir / "session.json").string() + ": " + e.what());
  }
}

}  // namespace taxelmap::scansim
