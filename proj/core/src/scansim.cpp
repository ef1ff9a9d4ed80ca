#include "taxelmap/scansim.hpp"

#include <cmath>
#include <random>
#include <string>

namespace taxelmap::scansim {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, what);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

struct FieldValidator {
  void operator()(const ConstantField& f) const { require(finite_nonneg(f.value), "constant field must be >= 0"); }
  void operator()(const CheckerboardField& f) const {
    require(std::isfinite(f.period_mm) && f.period_mm > 0.0, "checkerboard period must be > 0");
    require(finite_nonneg(f.lo) && finite_nonneg(f.hi), "checkerboard levels must be >= 0");
    require(std::isfinite(f.origin_x_mm) && std::isfinite(f.origin_y_mm), "checkerboard origin must be finite");
  }
  void operator()(const SinusoidField& f) const {
    require(std::isfinite(f.period_mm) && f.period_mm > 0.0, "sinusoid period must be > 0");
    require(finite_nonneg(f.amplitude), "sinusoid amplitude must be >= 0");
  }
  void operator()(const StepEdgeField& f) const {
    require(std::isfinite(f.edge_mm), "step edge position must be finite");
    require(finite_nonneg(f.lo) && finite_nonneg(f.hi), "step edge levels must be >= 0");
  }
};

struct FieldEvaluator {
  double x, y;
  double operator()(const ConstantField& f) const { return f.value; }
  double operator()(const CheckerboardField& f) const {
    const double side = f.period_mm / 2.0;
    const auto cx = static_cast<long long>(std::floor((x - f.origin_x_mm) / side));
    const auto cy = static_cast<long long>(std::floor((y - f.origin_y_mm) / side));
    return ((cx + cy) % 2 == 0) ? f.lo : f.hi;
  }
  double operator()(const SinusoidField& f) const {
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    return f.amplitude * 0.5 * (1.0 + std::sin(kTwoPi * y / f.period_mm));
  }
  double operator()(const StepEdgeField& f) const {
    const double c = f.axis == StepEdgeField::Axis::X ? x : y;
    return c < f.edge_mm ? f.lo : f.hi;
  }
};

}  // namespace

IntensityField::IntensityField(Variant v) : field_(std::move(v)) { std::visit(FieldValidator{}, field_); }

double IntensityField::eval(double x_mm, double y_mm) const {
  return std::visit(FieldEvaluator{x_mm, y_mm}, field_);
}

void ScanConfig::validate() const {
  require(std::isfinite(x_origin_mm) && std::isfinite(y_start_mm), "origin must be finite");
  require(std::isfinite(y_len_mm) && y_len_mm > 0.0, "y_len_mm must be > 0");
  require(lanes >= 1, "lanes must be >= 1");
  require(std::isfinite(lane_pitch_mm) && lane_pitch_mm > 0.0, "lane_pitch_mm must be > 0");
  require(passes_per_lane >= 2 && passes_per_lane % 2 == 0, "passes_per_lane must be even and >= 2");
  require(std::isfinite(cruise_speed_mm_s) && cruise_speed_mm_s > 0.0, "cruise_speed_mm_s must be > 0");
  require(std::isfinite(accel_mm_s2) && accel_mm_s2 > 0.0, "accel_mm_s2 must be > 0");
  require(std::isfinite(robot_rate_hz) && robot_rate_hz > 0.0, "robot_rate_hz must be > 0");
  require(std::isfinite(accel_rate_hz) && accel_rate_hz > 0.0, "accel_rate_hz must be > 0");
  require(std::isfinite(clock_offset_s), "clock_offset_s must be finite");
  require(finite_nonneg(noise_sigma_g), "noise_sigma_g must be >= 0");
  require(2.0 * accel_distance_mm() < y_len_mm,
          "cruise phase is empty: acceleration distance exceeds half the travel length");
}

double trapezoid_position(double t, const ScanConfig& cfg, Direction direction) {
  const double duration = cfg.pass_duration_s();
  if (!(t >= 0.0) || t > duration * (1.0 + 1e-12)) {
    throw Error(ErrorCode::TOutOfRange, "t=" + std::to_string(t) + " outside [0, " + std::to_string(duration) + "]");
  }
  t = std::min(t, duration);
  const double v = cfg.cruise_speed_mm_s;
  const double a = cfg.accel_mm_s2;
  const double ta = cfg.accel_time_s();
  const double tc = cfg.cruise_time_s();
  double s;
  if (t <= ta) {
    s = 0.5 * a * t * t;
  } else if (t <= ta + tc) {
    s = cfg.accel_distance_mm() + v * (t - ta);
  } else {
    const double remaining = duration - t;
    s = cfg.y_len_mm - 0.5 * a * remaining * remaining;
  }
  return direction == Direction::PositiveY ? cfg.y_start_mm + s : cfg.y_start_mm + cfg.y_len_mm - s;
}

std::size_t sample_count(double duration_s, double rate_hz) {
  return static_cast<std::size_t>(std::floor(duration_s * rate_hz + 1e-9)) + 1;
}

ScanSession simulate_session(const IntensityField& field, const ScanConfig& cfg) {
  cfg.validate();
  const double duration = cfg.pass_duration_s();
  const std::size_t n_robot = sample_count(duration, cfg.robot_rate_hz);
  const std::size_t n_accel = sample_count(duration, cfg.accel_rate_hz);

  ScanSession session{cfg, {}};
  session.passes.reserve(static_cast<std::size_t>(cfg.lanes) * cfg.passes_per_lane);
  for (int lane = 0; lane < cfg.lanes; ++lane) {
    for (int k = 0; k < cfg.passes_per_lane; ++k) {
      ScanPass pass;
      pass.lane_index = lane;
      pass.pass_index = k;
      pass.x_mm = cfg.lane_x_mm(lane);
      pass.direction = (k % 2 == 0) ? Direction::PositiveY : Direction::NegativeY;
      const auto global_index = static_cast<double>(lane * cfg.passes_per_lane + k);
      pass.start_time_s = global_index * duration;

      pass.robot.reserve(n_robot);
      for (std::size_t i = 0; i < n_robot; ++i) {
        const double local = std::min(static_cast<double>(i) / cfg.robot_rate_hz, duration);
        pass.robot.push_back({pass.start_time_s + local, pass.x_mm, trapezoid_position(local, cfg, pass.direction)});
      }

      // Per-pass stream keyed on (seed, lane, pass).
      std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                        static_cast<std::uint32_t>(lane), static_cast<std::uint32_t>(k)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> noise(0.0, cfg.noise_sigma_g > 0.0 ? cfg.noise_sigma_g : 1.0);

      pass.accel.reserve(n_accel);
      for (std::size_t j = 0; j < n_accel; ++j) {
        const double local = std::min(static_cast<double>(j) / cfg.accel_rate_hz, duration);
        const double y = trapezoid_position(local, cfg, pass.direction);
        const double magnitude = field.eval(pass.x_mm, y);
        const double sign = (rng() & 1U) ? 1.0 : -1.0;
        const double n = cfg.noise_sigma_g > 0.0 ? noise(rng) : 0.0;
        pass.accel.push_back({pass.start_time_s + local + cfg.clock_offset_s, 1.0 + sign * magnitude + n});
      }
      session.passes.push_back(std::move(pass));
    }
  }
  return session;
}

}  // namespace taxelmap::scansim
