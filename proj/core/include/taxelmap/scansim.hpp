#pragma once

#include <cstdint>
#include <filesystem>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "taxelmap/error.hpp"

namespace taxelmap::scansim {

// Ground-truth surface intensity fields (g units, always >= 0).

struct ConstantField {
  double value = 0.0;
};

/// Alternating squares of side period_mm / 2; a full lo/hi cycle spans
/// period_mm along each axis. The square containing the origin is `lo`.
struct CheckerboardField {
  double period_mm = 10.0;
  double lo = 0.1;
  double hi = 0.5;
  double origin_x_mm = 0.0;
  double origin_y_mm = 0.0;
};

/// amplitude * (1 + sin(2 pi y / period)) / 2, varying along Y.
struct SinusoidField {
  double period_mm = 10.0;
  double amplitude = 0.5;
};

/// `lo` below the edge, `hi` at or beyond it, along the chosen axis.
struct StepEdgeField {
  enum class Axis { X, Y };
  Axis axis = Axis::Y;
  double edge_mm = 0.0;
  double lo = 0.0;
  double hi = 0.5;
};

class IntensityField {
 public:
  using Variant = std::variant<ConstantField, CheckerboardField, SinusoidField, StepEdgeField>;

  IntensityField() : field_(ConstantField{}) {}
  IntensityField(Variant v);  // NOLINT(google-explicit-constructor)
  template <typename F>
    requires std::is_constructible_v<Variant, F>
  IntensityField(F f) : IntensityField(Variant(std::move(f))) {}  // NOLINT(google-explicit-constructor)

  double eval(double x_mm, double y_mm) const;
  const Variant& variant() const noexcept { return field_; }

 private:
  Variant field_;
};

struct ScanConfig {
  double x_origin_mm = 0.0;
  double y_start_mm = 0.0;
  double y_len_mm = 40.0;
  int lanes = 20;
  double lane_pitch_mm = 2.0;
  int passes_per_lane = 8;
  double cruise_speed_mm_s = 10.0;
  double accel_mm_s2 = 100.0;
  double robot_rate_hz = 125.0;
  double accel_rate_hz = 1000.0;
  double clock_offset_s = 0.003;
  double noise_sigma_g = 0.01;
  std::uint64_t seed = 1;

  /// Throws InvalidConfig describing the first violated invariant.
  void validate() const;

  double accel_time_s() const { return cruise_speed_mm_s / accel_mm_s2; }
  double accel_distance_mm() const { return cruise_speed_mm_s * cruise_speed_mm_s / (2.0 * accel_mm_s2); }
  double cruise_time_s() const { return (y_len_mm - 2.0 * accel_distance_mm()) / cruise_speed_mm_s; }
  double pass_duration_s() const { return 2.0 * accel_time_s() + cruise_time_s(); }
  double lane_x_mm(int lane) const { return x_origin_mm + lane * lane_pitch_mm; }
};

enum class Direction { PositiveY, NegativeY };

struct RobotSample {
  double t = 0.0;
  double x_mm = 0.0;
  double y_mm = 0.0;
  friend bool operator==(const RobotSample&, const RobotSample&) = default;
};

struct AccelSample {
  double t = 0.0;
  double acc_g = 0.0;
  friend bool operator==(const AccelSample&, const AccelSample&) = default;
};

struct ScanPass {
  int lane_index = 0;
  int pass_index = 0;  // within the lane
  double x_mm = 0.0;
  Direction direction = Direction::PositiveY;
  double start_time_s = 0.0;  // session-clock time at which the pass begins
  std::vector<RobotSample> robot;
  std::vector<AccelSample> accel;
  friend bool operator==(const ScanPass&, const ScanPass&) = default;
};

struct ScanSession {
  ScanConfig config;
  std::vector<ScanPass> passes;
};

/// Position along Y at time t in [0, pass_duration] of a trapezoidal-velocity
/// sweep. +Y passes start at y_start; -Y passes start at y_start + y_len.
double trapezoid_position(double t, const ScanConfig& cfg, Direction direction);

/// Passes alternate +Y/-Y within a lane; pass p of the session (lane-major)
/// starts at p * pass_duration on the robot clock. The accelerometer clock
/// reads robot time + clock_offset_s.
ScanSession simulate_session(const IntensityField& field, const ScanConfig& cfg);

/// Number of samples a stream at `rate_hz` produces over `duration_s`.
std::size_t sample_count(double duration_s, double rate_hz);

// Session directory layout: session.json plus robot_<k>.csv / accel_<k>.csv.
void write_session(const ScanSession& session, const std::filesystem::path& dir);
ScanSession read_session(const std::filesystem::path& dir);

void to_json(nlohmann::json& j, const ScanConfig& cfg);
void from_json(const nlohmann::json& j, ScanConfig& cfg);
void to_json(nlohmann::json& j, const IntensityField& field);
void from_json(const nlohmann::json& j, IntensityField& field);

}  // namespace taxelmap::scansim
