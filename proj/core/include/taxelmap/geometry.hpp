#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "taxelmap/error.hpp"

namespace taxelmap::geometry {

/// A point on the object plane in robot base coordinates (Z is fixed to 0).
struct WorldPoint {
  double x_mm = 0.0;
  double y_mm = 0.0;
};

struct PixelPoint {
  double u_px = 0.0;  // column
  double v_px = 0.0;  // row
};

struct Correspondence {
  WorldPoint world;
  PixelPoint pixel;
};

/// Planar world->pixel projection. With Z = 0 the intrinsic/extrinsic product
/// collapses to one 3x3 homography; the per-point scale factor is the
/// homogeneous divisor. Stored normalized so that h(2,2) == 1.
class CameraProjection {
 public:
  /// Throws DegenerateConfiguration if h is singular or h(2,2) == 0.
  explicit CameraProjection(const Eigen::Matrix3d& h);

  static CameraProjection identity();

  const Eigen::Matrix3d& matrix() const noexcept { return h_; }
  CameraProjection inverse() const;

  /// Row-major copy of the nine coefficients.
  std::array<double, 9> coefficients() const;
  static CameraProjection from_coefficients(std::span<const double, 9> row_major);

 private:
  Eigen::Matrix3d h_;
};

struct CalibrationResult {
  CameraProjection projection;
  double rmse_px = 0.0;
};

inline constexpr std::size_t kMinCalibrationPoints = 8;

/// Normalized DLT over >= 8 correspondences. Throws FewerThan8Points or
/// DegenerateConfiguration (design matrix rank < 8).
CalibrationResult calibrate_planar(std::span<const Correspondence> points);

/// Throws PointAtInfinity when |w| < 1e-12.
PixelPoint project(const CameraProjection& proj, const WorldPoint& p);

/// Root-mean-square pixel distance between project(world) and pixel.
double reprojection_rmse(const CameraProjection& proj, std::span<const Correspondence> points);

/// Dense row-major grid, indexed (x = column, y = row).
template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Bilinear sample at continuous (x, y). Coordinates within 1e-7 px of a node
/// snap to it, so node samples are bit-exact. Outside [0, w-1] x [0, h-1] -> 0.
template <typename T>
double sample_bilinear(const Grid<T>& grid, double x, double y);

/// Corners in order: top-left, top-right, bottom-right, bottom-left.
struct Quad {
  std::array<PixelPoint, 4> corners;
};

/// True if the corners form a strictly convex quadrilateral in either winding.
bool is_strictly_convex(const Quad& q);

/// Homography taking the output rectangle's corners (0,0), (w-1,0),
/// (w-1,h-1), (0,h-1) exactly onto src's corners.
Eigen::Matrix3d rectangle_to_quad(const Quad& src, int out_w, int out_h);

/// Perspective rectification: output (i, j) samples the input at H_q (i, j)
/// bilinearly; out-of-bounds samples are 0. Throws NonConvexQuad.
template <typename T>
Grid<T> warp_perspective(const Grid<T>& input, const Quad& src, int out_w, int out_h);

/// Correspondence CSV: header `x_mm,y_mm,u_px,v_px`.
std::vector<Correspondence> read_correspondences(const std::filesystem::path& path);
void write_correspondences(const std::filesystem::path& path, std::span<const Correspondence> points);

}  // namespace taxelmap::geometry
