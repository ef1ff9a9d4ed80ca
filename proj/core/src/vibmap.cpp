#include "taxelmap/vibmap.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <utility>

#include "csv.hpp"

namespace taxelmap::vibmap {

std::size_t VibrationMap::touched_count() const {
  return static_cast<std::size_t>(std::count_if(touched.data.begin(), touched.data.end(),
                                                [](std::uint8_t m) { return m != 0; }));
}

std::vector<PositionedVibration> to_intensity(std::span<const PositionedVibration> d, double baseline_g) {
  std::vector<PositionedVibration> out(d.begin(), d.end());
  for (auto& s : out) s.acc_g = std::abs(s.acc_g - baseline_g);
  return out;
}

std::vector<PositionedVibration> sort_by_position(std::span<const PositionedVibration> d) {
  std::vector<PositionedVibration> out(d.begin(), d.end());
  std::stable_sort(out.begin(), out.end(), [](const PositionedVibration& a, const PositionedVibration& b) {
    if (a.x_mm != b.x_mm) return a.x_mm < b.x_mm;
    return a.y_mm < b.y_mm;
  });
  return out;
}

TaxelLane bin_taxels(std::span<const PositionedVibration> d_sorted, double lane_x, double y0_mm, std::size_t n_bins,
                     double pitch_mm) {
  if (!(pitch_mm > 0.0)) throw Error(ErrorCode::InvalidConfig, "taxel pitch must be > 0");
  TaxelLane lane;
  lane.x_mm = lane_x;
  lane.y0_mm = y0_mm;
  lane.pitch_mm = pitch_mm;
  lane.values.assign(n_bins, 0.0);
  lane.counts.assign(n_bins, 0);

  std::vector<double> sums(n_bins, 0.0);
  for (const auto& s : d_sorted) {
    if (std::abs(s.x_mm - lane_x) > 1e-9) {
      throw Error(ErrorCode::LaneMismatch, "sample at x=" + std::to_string(s.x_mm) + " in lane x=" + std::to_string(lane_x));
    }
    const double offset = std::floor((s.y_mm - y0_mm) / pitch_mm);
    if (!(offset >= 0.0) || offset >= static_cast<double>(n_bins)) continue;
    const auto k = static_cast<std::size_t>(offset);
    sums[k] += s.acc_g;
    ++lane.counts[k];
  }
  for (std::size_t k = 0; k < n_bins; ++k) {
    if (lane.counts[k] > 0) lane.values[k] = sums[k] / static_cast<double>(lane.counts[k]);
  }
  return lane;
}

void update_raw_stats(VibrationMap& map) {
  // Welford update.
  std::size_t n = 0;
  double mean = 0.0, m2 = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < map.values.data.size(); ++i) {
    if (!map.touched.data[i]) continue;
    const double v = map.values.data[i];
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (n == 0) {
    map.raw_min = map.raw_max = map.raw_mean = map.raw_std = 0.0;
    return;
  }
  map.raw_min = lo;
  map.raw_max = hi;
  map.raw_mean = mean;
  map.raw_std = std::sqrt(m2 / static_cast<double>(n));
}

VibrationMap rasterize(std::span<const TaxelLane> lanes, const geometry::CameraProjection& proj, int width_px,
                       int height_px, int stretch_px) {
  if (width_px < 1 || height_px < 1) throw Error(ErrorCode::InvalidConfig, "map dimensions must be positive");
  if (stretch_px < 0) throw Error(ErrorCode::InvalidConfig, "stretch must be >= 0");

  const auto& h = proj.matrix();
  geometry::Grid<double> sums(width_px, height_px, 0.0);
  geometry::Grid<std::uint32_t> hits(width_px, height_px, 0);
  const double band_u0 = -0.5 * width_px, band_u1 = 1.5 * width_px;
  const double band_v0 = -0.5 * height_px, band_v1 = 1.5 * height_px;
  std::size_t populated = 0, in_band = 0;
  double pitch = kDefaultTaxelPitchMm;

  std::set<std::pair<int, int>> stripe;
  for (const auto& lane : lanes) {
    pitch = lane.pitch_mm;
    for (std::size_t k = 0; k < lane.values.size(); ++k) {
      if (lane.counts[k] == 0) continue;
      ++populated;
      const double x = lane.x_mm, y = lane.center_y_mm(k);
      const Eigen::Vector3d q = h * Eigen::Vector3d(x, y, 1.0);
      if (std::abs(q.z()) < 1e-12) continue;
      const double u = q.x() / q.z(), v = q.y() / q.z();
      if (!(u >= band_u0 && u < band_u1 && v >= band_v0 && v < band_v1)) continue;
      ++in_band;

      // Image-space direction of the lane (d/dY of the projection) and its normal.
      const double du = (h(0, 1) * q.z() - q.x() * h(2, 1)) / (q.z() * q.z());
      const double dv = (h(1, 1) * q.z() - q.y() * h(2, 1)) / (q.z() * q.z());
      const double len = std::hypot(du, dv);
      const double nu = len > 0.0 ? -dv / len : 1.0;
      const double nv = len > 0.0 ? du / len : 0.0;

      stripe.clear();
      for (int s = -stretch_px; s <= stretch_px; ++s) {
        const int pu = static_cast<int>(std::floor(u + s * nu + 0.5));
        const int pv = static_cast<int>(std::floor(v + s * nv + 0.5));
        if (sums.contains(pu, pv)) stripe.emplace(pu, pv);
      }
      for (const auto& [pu, pv] : stripe) {
        sums.at(pu, pv) += lane.values[k];
        ++hits.at(pu, pv);
      }
    }
  }
  if (populated > 0 && in_band == 0) {
    throw Error(ErrorCode::ProjectionOutOfFrame, "no taxel projects inside the image guard band");
  }

  VibrationMap map;
  map.values = geometry::Grid<float>(width_px, height_px, 0.0F);
  map.touched = geometry::Grid<std::uint8_t>(width_px, height_px, 0);
  map.taxel_pitch_mm = pitch;
  for (std::size_t i = 0; i < sums.data.size(); ++i) {
    if (hits.data[i] == 0) continue;
    map.values.data[i] = static_cast<float>(sums.data[i] / hits.data[i]);
    map.touched.data[i] = 1;
  }
  update_raw_stats(map);
  return map;
}

VibrationMap normalize(const VibrationMap& map) {
  VibrationMap out = map;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < map.values.data.size(); ++i) {
    if (!map.touched.data[i]) continue;
    lo = std::min(lo, static_cast<double>(map.values.data[i]));
    hi = std::max(hi, static_cast<double>(map.values.data[i]));
  }
  const double range = hi - lo;
  for (std::size_t i = 0; i < out.values.data.size(); ++i) {
    if (!out.touched.data[i] || !(range > 0.0)) {
      out.values.data[i] = 0.0F;
      continue;
    }
    out.values.data[i] = static_cast<float>((static_cast<double>(map.values.data[i]) - lo) / range);
  }
  out.normalized = true;
  return out;
}

MapStats map_stats(const VibrationMap& map) {
  if (map.touched_count() == 0) throw Error(ErrorCode::NoTouchedPixels, "map has no touched pixels");
  return {map.raw_max - map.raw_min, map.raw_mean, map.raw_std};
}

std::string format_stats_csv(const MapStats& stats) {
  return detail::format_fixed(stats.v_scale, 3) + ',' + detail::format_fixed(stats.v_mean, 3) + ',' +
         detail::format_fixed(stats.v_std, 3);
}

VibrationMap warp_map(const VibrationMap& map, const geometry::Quad& src, int out_w, int out_h) {
  geometry::Grid<float> mask(map.touched.width, map.touched.height, 0.0F);
  for (std::size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = map.touched.data[i] ? 1.0F : 0.0F;

  VibrationMap out;
  out.values = geometry::warp_perspective(map.values, src, out_w, out_h);
  const auto warped_mask = geometry::warp_perspective(mask, src, out_w, out_h);
  out.touched = geometry::Grid<std::uint8_t>(out_w, out_h, 0);
  for (std::size_t i = 0; i < warped_mask.data.size(); ++i) {
    out.touched.data[i] = warped_mask.data[i] >= 0.5F ? 1 : 0;
    if (!out.touched.data[i]) out.values.data[i] = 0.0F;
  }
  out.normalized = map.normalized;
  out.taxel_pitch_mm = map.taxel_pitch_mm;
  out.raw_min = map.raw_min;
  out.raw_max = map.raw_max;
  out.raw_mean = map.raw_mean;
  out.raw_std = map.raw_std;
  return out;
}

namespace {

// Nearest-neighbour fill of short untouched runs along one line of the grid.
void fill_line(geometry::Grid<float>& values, geometry::Grid<std::uint8_t>& mask, int count, int max_gap_px,
               const std::function<std::pair<int, int>(int)>& cell) {
  std::vector<int> filled;
  int prev = -1;
  for (int i = 0; i < count; ++i) {
    const auto [x, y] = cell(i);
    if (!mask.at(x, y)) continue;
    if (prev >= 0 && i - prev > 1 && i - prev - 1 <= max_gap_px) {
      const auto [px, py] = cell(prev);
      for (int g = prev + 1; g < i; ++g) {
        const auto [gx, gy] = cell(g);
        values.at(gx, gy) = (g - prev <= i - g) ? values.at(px, py) : values.at(x, y);
        filled.push_back(g);
      }
    }
    prev = i;
  }
  for (int g : filled) {
    const auto [gx, gy] = cell(g);
    mask.at(gx, gy) = 1;
  }
}

}  // namespace

geometry::Grid<float> fill_lane_gaps(const VibrationMap& map, int max_gap_px) {
  geometry::Grid<float> out = map.values;
  geometry::Grid<std::uint8_t> mask = map.touched;
  for (int y = 0; y < out.height; ++y) {
    fill_line(out, mask, out.width, max_gap_px, [y](int i) { return std::pair{i, y}; });
  }
  for (int x = 0; x < out.width; ++x) {
    fill_line(out, mask, out.height, max_gap_px, [x](int i) { return std::pair{x, i}; });
  }
  return out;
}

std::uint8_t preview_level(double v) {
  const double clamped = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(clamped * 255.0 + 0.5));
}

geometry::Grid<std::uint8_t> preview_pixels(const geometry::Grid<float>& values) {
  geometry::Grid<std::uint8_t> out(values.width, values.height, 0);
  for (std::size_t i = 0; i < values.data.size(); ++i) out.data[i] = preview_level(values.data[i]);
  return out;
}

}  // namespace taxelmap::vibmap
