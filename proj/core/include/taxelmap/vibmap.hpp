#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "taxelmap/alignment.hpp"
#include "taxelmap/error.hpp"
#include "taxelmap/geometry.hpp"

namespace taxelmap::vibmap {

using alignment::PositionedVibration;

inline constexpr double kDefaultTaxelPitchMm = 1.0;
inline constexpr int kDefaultStretchPx = 3;
inline constexpr double kDefaultBaselineG = 1.0;

/// Mean intensity per taxel bin along one lane. Bin k covers
/// [y0 + k*pitch, y0 + (k+1)*pitch). Empty bins hold 0 with count 0.
struct TaxelLane {
  double x_mm = 0.0;
  double y0_mm = 0.0;
  double pitch_mm = kDefaultTaxelPitchMm;
  std::vector<double> values;
  std::vector<std::size_t> counts;

  double center_y_mm(std::size_t k) const { return y0_mm + (static_cast<double>(k) + 0.5) * pitch_mm; }
};

/// Pixel-registered intensity grid. `touched` marks pixels that received at
/// least one taxel; raw_* always describe the pre-normalization values of the
/// touched pixels.
struct VibrationMap {
  geometry::Grid<float> values;
  geometry::Grid<std::uint8_t> touched;
  bool normalized = false;
  double taxel_pitch_mm = kDefaultTaxelPitchMm;
  double raw_min = 0.0;
  double raw_max = 0.0;
  double raw_mean = 0.0;
  double raw_std = 0.0;

  int width_px() const noexcept { return values.width; }
  int height_px() const noexcept { return values.height; }
  std::size_t touched_count() const;

  friend bool operator==(const VibrationMap&, const VibrationMap&) = default;
};

struct MapStats {
  double v_scale = 0.0;
  double v_mean = 0.0;
  double v_std = 0.0;
};

/// V = |acc - baseline|; positions untouched.
std::vector<PositionedVibration> to_intensity(std::span<const PositionedVibration> d,
                                              double baseline_g = kDefaultBaselineG);

/// Stable ascending sort by (x_mm, y_mm).
std::vector<PositionedVibration> sort_by_position(std::span<const PositionedVibration> d);

/// Averages intensities (the acc_g field) into n_bins taxels. Samples outside
/// the bin range are ignored. Throws LaneMismatch if any x differs from lane_x.
TaxelLane bin_taxels(std::span<const PositionedVibration> d_sorted, double lane_x, double y0_mm, std::size_t n_bins,
                     double pitch_mm = kDefaultTaxelPitchMm);

/// Projects each populated taxel center and writes its value to a
/// (2*stretch+1)-pixel stripe perpendicular to the lane's projected direction.
/// Overlapping writes are averaged in lane order. Throws ProjectionOutOfFrame
/// when no populated taxel lands inside the guard band (the image grown by
/// half its size on every side).
VibrationMap rasterize(std::span<const TaxelLane> lanes, const geometry::CameraProjection& proj, int width_px,
                       int height_px, int stretch_px = kDefaultStretchPx);

/// Min-max normalization of touched pixels; untouched pixels stay 0.
/// A constant map normalizes to all zeros.
VibrationMap normalize(const VibrationMap& map);

/// (raw_max - raw_min, raw_mean, raw_std). Throws NoTouchedPixels.
MapStats map_stats(const VibrationMap& map);

/// Recomputes raw_* (population std) from the current touched values.
void update_raw_stats(VibrationMap& map);

inline constexpr const char* kStatsCsvHeader = "v_scale,v_mean,v_std";
/// Three decimals per field, e.g. "0.666,0.065,0.052".
std::string format_stats_csv(const MapStats& stats);

/// Rectifies a map; the mask is warped as 0/1 and thresholded at 0.5.
VibrationMap warp_map(const VibrationMap& map, const geometry::Quad& src, int out_w, int out_h);

/// Visualization only. Untouched runs of at most max_gap_px between two
/// touched pixels take the nearer value, first along rows, then columns.
geometry::Grid<float> fill_lane_gaps(const VibrationMap& map, int max_gap_px);

// `.vibmap`: "VMAP1", u32 LE header length, JSON header, f32 LE grid
// (row-major), then one mask byte per pixel.
void write_map(const VibrationMap& map, const std::filesystem::path& path);
VibrationMap read_map(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_map(const VibrationMap& map);
VibrationMap decode_map(std::span<const std::uint8_t> bytes);

/// 8-bit preview: round-half-up of clamp(v, 0, 1) * 255.
std::uint8_t preview_level(double v);
geometry::Grid<std::uint8_t> preview_pixels(const geometry::Grid<float>& values);
void write_png(const geometry::Grid<std::uint8_t>& gray, const std::filesystem::path& path);
geometry::Grid<std::uint8_t> read_png(const std::filesystem::path& path);

}  // namespace taxelmap::vibmap
