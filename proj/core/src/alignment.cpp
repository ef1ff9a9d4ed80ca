#include "taxelmap/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace taxelmap::alignment {
namespace {

std::size_t nearest_y(std::span<const RobotSample> robot, double target) {
  std::size_t best = 0;
  double best_dist = std::abs(robot[0].y_mm - target);
  for (std::size_t i = 1; i < robot.size(); ++i) {
    const double d = std::abs(robot[i].y_mm - target);
    if (d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

// Nearest timestamp in a strictly increasing sequence; ties go to the lower index.
std::size_t nearest_time(std::span<const AccelSample> accel, double t) {
  const auto it = std::lower_bound(accel.begin(), accel.end(), t,
                                   [](const AccelSample& s, double value) { return s.t < value; });
  if (it == accel.begin()) return 0;
  if (it == accel.end()) return accel.size() - 1;
  const auto hi = static_cast<std::size_t>(it - accel.begin());
  const std::size_t lo = hi - 1;
  return std::abs(accel[lo].t - t) <= std::abs(accel[hi].t - t) ? lo : hi;
}

}  // namespace

void require_increasing(std::span<const RobotSample> robot) {
  for (std::size_t i = 1; i < robot.size(); ++i) {
    if (!(robot[i].t > robot[i - 1].t)) {
      throw Error(ErrorCode::NonMonotonicTimestamps, "robot timestamps not increasing at sample " + std::to_string(i));
    }
  }
}

void require_increasing(std::span<const AccelSample> accel) {
  for (std::size_t j = 1; j < accel.size(); ++j) {
    if (!(accel[j].t > accel[j - 1].t)) {
      throw Error(ErrorCode::NonMonotonicTimestamps, "accel timestamps not increasing at sample " + std::to_string(j));
    }
  }
}

CruiseWindow cruise_indices(std::span<const RobotSample> robot, double l_mm, double w, Direction direction) {
  if (!(w > 0.0 && w <= 0.5)) throw Error(ErrorCode::WOutOfRange, "w must satisfy 0 < w <= 0.5");
  if (robot.size() < 4) throw Error(ErrorCode::TooFewSamples, "need at least 4 robot samples");

  double sum = 0.0;
  for (const auto& s : robot) sum += s.y_mm;
  const double y_bar = sum / static_cast<double>(robot.size());

  const std::size_t low = nearest_y(robot, y_bar - w * l_mm);
  const std::size_t high = nearest_y(robot, y_bar + w * l_mm);

  CruiseWindow win;
  if (direction == Direction::PositiveY) {
    win.i1 = low;
    win.i2 = high;
  } else {
    win.i1 = high;
    win.i2 = low;
  }
  win.t_i1 = robot[win.i1].t;
  win.t_i2 = robot[win.i2].t;
  return win;
}

LinearFit fit_cruise_line(std::span<const RobotSample> robot, const CruiseWindow& win) {
  const std::size_t first = std::min(win.i1, win.i2);
  const std::size_t last = std::max(win.i1, win.i2);
  if (last >= robot.size()) throw Error(ErrorCode::DegenerateWindow, "window exceeds sample range");
  const auto n = static_cast<double>(last - first + 1);

  // Accumulate relative to the window start.
  const double t_ref = robot[first].t;
  double t_mean = 0.0, y_mean = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    t_mean += robot[i].t - t_ref;
    y_mean += robot[i].y_mm;
  }
  t_mean /= n;
  y_mean /= n;

  double stt = 0.0, sty = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    const double dt = (robot[i].t - t_ref) - t_mean;
    stt += dt * dt;
    sty += dt * (robot[i].y_mm - y_mean);
  }
  if (!(stt > 0.0)) throw Error(ErrorCode::DegenerateWindow, "window has no timestamp spread");

  LinearFit fit;
  fit.m = sty / stt;
  fit.b = y_mean - fit.m * (t_ref + t_mean);
  fit.t_lo = std::min(robot[first].t, robot[last].t);
  fit.t_hi = std::max(robot[first].t, robot[last].t);

  double sse = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    const double r = robot[i].y_mm - fit.position_at(robot[i].t);
    sse += r * r;
  }
  fit.rmse_mm = std::sqrt(sse / n);
  return fit;
}

AccelWindow accel_window(std::span<const AccelSample> accel, double t_i1, double t_i2) {
  if (accel.empty()) throw Error(ErrorCode::EmptyWindow, "no accelerometer samples");
  require_increasing(accel);
  const auto j1 = static_cast<long long>(nearest_time(accel, t_i1)) + 1;
  const auto j2 = static_cast<long long>(nearest_time(accel, t_i2)) - 1;
  if (j1 > j2) {
    throw Error(ErrorCode::EmptyWindow, "j1=" + std::to_string(j1) + " > j2=" + std::to_string(j2));
  }
  return {static_cast<std::size_t>(j1), static_cast<std::size_t>(j2)};
}

std::vector<PositionedVibration> position_accels(std::span<const AccelSample> accel, const AccelWindow& win,
                                                 const LinearFit& fit, double x_mm) {
  std::vector<PositionedVibration> out;
  out.reserve(win.j2 - win.j1 + 1);
  for (std::size_t j = win.j1; j <= win.j2; ++j) {
    out.push_back({accel[j].acc_g, x_mm, fit.position_at(accel[j].t)});
  }
  return out;
}

PassAlignment align_pass(const scansim::ScanPass& pass, double l_mm, double w) {
  require_increasing(std::span<const RobotSample>(pass.robot));
  for (const auto& s : pass.robot) {
    if (s.x_mm != pass.x_mm) throw Error(ErrorCode::LaneMismatch, "robot sample x differs from pass x");
  }
  PassAlignment out;
  out.cruise = cruise_indices(pass.robot, l_mm, w, pass.direction);
  out.fit = fit_cruise_line(pass.robot, out.cruise);
  const bool forward = pass.direction == Direction::PositiveY;
  if ((forward && !(out.fit.m > 0.0)) || (!forward && !(out.fit.m < 0.0))) {
    throw Error(ErrorCode::DirectionMismatch, "fitted slope sign disagrees with pass direction");
  }
  out.window = accel_window(pass.accel, out.cruise.t_i1, out.cruise.t_i2);
  out.samples = position_accels(pass.accel, out.window, out.fit, pass.x_mm);
  return out;
}

}  // namespace taxelmap::alignment
