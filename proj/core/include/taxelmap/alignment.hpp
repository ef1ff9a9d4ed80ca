#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "taxelmap/error.hpp"
#include "taxelmap/scansim.hpp"

namespace taxelmap::alignment {

using scansim::AccelSample;
using scansim::Direction;
using scansim::RobotSample;

inline constexpr double kDefaultCruiseWeight = 0.45;

/// Constant-velocity segment of a pass. i1 is always the start index and i2
/// the end index in time, so t_i1 < t_i2 for either direction.
struct CruiseWindow {
  std::size_t i1 = 0;
  std::size_t i2 = 0;
  double t_i1 = 0.0;
  double t_i2 = 0.0;
};

/// Y = m t + b, valid on [t_lo, t_hi].
struct LinearFit {
  double m = 0.0;
  double b = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double rmse_mm = 0.0;

  double position_at(double t) const { return m * t + b; }
};

struct AccelWindow {
  std::size_t j1 = 0;
  std::size_t j2 = 0;
};

struct PositionedVibration {
  double acc_g = 0.0;
  double x_mm = 0.0;
  double y_mm = 0.0;
  friend bool operator==(const PositionedVibration&, const PositionedVibration&) = default;
};

/// Ybar = mean(Y_i); the two indices nearest Ybar -/+ w*l (lowest index on
/// ties). For -Y passes the two roles are swapped so i1 stays the earlier one.
/// Throws WOutOfRange unless 0 < w <= 0.5, TooFewSamples if |robot| < 4.
CruiseWindow cruise_indices(std::span<const RobotSample> robot, double l_mm, double w, Direction direction);

/// Ordinary least squares of Y on t over samples [min(i1,i2), max(i1,i2)].
/// Throws DegenerateWindow when fewer than two distinct timestamps remain.
LinearFit fit_cruise_line(std::span<const RobotSample> robot, const CruiseWindow& win);

/// j1 = argmin|t_j - t_i1| + 1, j2 = argmin|t_j - t_i2| - 1 (lowest index on
/// ties). Throws NonMonotonicTimestamps or EmptyWindow (j1 > j2).
AccelWindow accel_window(std::span<const AccelSample> accel, double t_i1, double t_i2);

/// Places each accel sample in [j1, j2] on the fitted line at lane x.
std::vector<PositionedVibration> position_accels(std::span<const AccelSample> accel, const AccelWindow& win,
                                                 const LinearFit& fit, double x_mm);

/// Throws NonMonotonicTimestamps unless timestamps strictly increase.
void require_increasing(std::span<const RobotSample> robot);
void require_increasing(std::span<const AccelSample> accel);

struct PassAlignment {
  CruiseWindow cruise;
  LinearFit fit;
  AccelWindow window;
  std::vector<PositionedVibration> samples;
};

/// Full taxel-to-world chain for one pass. Rejects passes whose timestamps are
/// not increasing or whose fitted slope disagrees with the declared direction.
PassAlignment align_pass(const scansim::ScanPass& pass, double l_mm, double w);

}  // namespace taxelmap::alignment
