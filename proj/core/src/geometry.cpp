#include "taxelmap/geometry.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "csv.hpp"

namespace taxelmap::geometry {
namespace {

constexpr double kInfinityThreshold = 1e-12;
constexpr double kNodeSnap = 1e-7;
constexpr double kRankTolerance = 1e-8;

// Similarity transform moving the centroid to the origin with mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0) || !std::isfinite(mean_dist)) {
    throw Error(ErrorCode::DegenerateConfiguration, "all points coincide");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * centroid.x(),
       0, s, -s * centroid.y(),
       0, 0, 1;
  return t;
}

double snap_to_node(double c) {
  const double r = std::round(c);
  return std::abs(c - r) <= kNodeSnap ? r : c;
}

}  // namespace

CameraProjection::CameraProjection(const Eigen::Matrix3d& h) {
  if (!h.allFinite()) throw Error(ErrorCode::DegenerateConfiguration, "non-finite projection");
  const double scale = h.norm();
  if (!(scale > 0.0) || std::abs(h(2, 2)) <= 1e-14 * scale) {
    throw Error(ErrorCode::DegenerateConfiguration, "projection has h[2][2] == 0");
  }
  h_ = h / h(2, 2);
  const double n = h_.norm();
  if (std::abs(h_.determinant()) <= 1e-14 * n * n * n) {
    throw Error(ErrorCode::DegenerateConfiguration, "projection is singular");
  }
}

CameraProjection CameraProjection::identity() { return CameraProjection(Eigen::Matrix3d::Identity()); }

CameraProjection CameraProjection::inverse() const { return CameraProjection(h_.inverse()); }

std::array<double, 9> CameraProjection::coefficients() const {
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(r * 3 + c)] = h_(r, c);
  return out;
}

CameraProjection CameraProjection::from_coefficients(std::span<const double, 9> row_major) {
  Eigen::Matrix3d h;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) h(r, c) = row_major[static_cast<std::size_t>(r * 3 + c)];
  return CameraProjection(h);
}

PixelPoint project(const CameraProjection& proj, const WorldPoint& p) {
  const Eigen::Vector3d q = proj.matrix() * Eigen::Vector3d(p.x_mm, p.y_mm, 1.0);
  if (std::abs(q.z()) < kInfinityThreshold) {
    throw Error(ErrorCode::PointAtInfinity, "homogeneous coordinate vanishes");
  }
  return {q.x() / q.z(), q.y() / q.z()};
}

double reprojection_rmse(const CameraProjection& proj, std::span<const Correspondence> points) {
  if (points.empty()) return 0.0;
  double sum_sq = 0.0;
  for (const auto& c : points) {
    const PixelPoint p = project(proj, c.world);
    const double du = p.u_px - c.pixel.u_px;
    const double dv = p.v_px - c.pixel.v_px;
    sum_sq += du * du + dv * dv;
  }
  return std::sqrt(sum_sq / static_cast<double>(points.size()));
}

CalibrationResult calibrate_planar(std::span<const Correspondence> points) {
  if (points.size() < kMinCalibrationPoints) {
    throw Error(ErrorCode::FewerThan8Points,
                "need at least 8 correspondences, got " + std::to_string(points.size()));
  }
  std::vector<Eigen::Vector2d> world, pixel;
  world.reserve(points.size());
  pixel.reserve(points.size());
  for (const auto& c : points) {
    world.emplace_back(c.world.x_mm, c.world.y_mm);
    pixel.emplace_back(c.pixel.u_px, c.pixel.v_px);
  }
  const Eigen::Matrix3d t_world = normalizing_transform(world);
  const Eigen::Matrix3d t_pixel = normalizing_transform(pixel);

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d w = t_world * world[static_cast<std::size_t>(i)].homogeneous();
    const Eigen::Vector3d p = t_pixel * pixel[static_cast<std::size_t>(i)].homogeneous();
    const double x = w.x() / w.z(), y = w.y() / w.z();
    const double u = p.x() / p.z(), v = p.y() / p.z();
    a.row(2 * i) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    a.row(2 * i + 1) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(7) > kRankTolerance * sv(0))) {
    throw Error(ErrorCode::DegenerateConfiguration, "design matrix rank < 8");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d h_norm;
  h_norm << h(0), h(1), h(2),
            h(3), h(4), h(5),
            h(6), h(7), h(8);
  const Eigen::Matrix3d h_full = t_pixel.inverse() * h_norm * t_world;

  CameraProjection proj(h_full);
  return {proj, reprojection_rmse(proj, points)};
}

template <typename T>
double sample_bilinear(const Grid<T>& grid, double x, double y) {
  if (grid.width <= 0 || grid.height <= 0) return 0.0;
  x = snap_to_node(x);
  y = snap_to_node(y);
  if (!(x >= 0.0 && y >= 0.0 && x <= grid.width - 1 && y <= grid.height - 1)) return 0.0;
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const int x1 = fx > 0.0 ? x0 + 1 : x0;
  const int y1 = fy > 0.0 ? y0 + 1 : y0;
  const double v00 = grid.at(x0, y0);
  if (x1 == x0 && y1 == y0) return v00;
  const double top = std::lerp(v00, static_cast<double>(grid.at(x1, y0)), fx);
  if (y1 == y0) return top;
  const double bottom =
      std::lerp(static_cast<double>(grid.at(x0, y1)), static_cast<double>(grid.at(x1, y1)), fx);
  return std::lerp(top, bottom, fy);
}

template double sample_bilinear(const Grid<float>&, double, double);
template double sample_bilinear(const Grid<double>&, double, double);

bool is_strictly_convex(const Quad& q) {
  int positive = 0, negative = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& a = q.corners[i];
    const auto& b = q.corners[(i + 1) % 4];
    const auto& c = q.corners[(i + 2) % 4];
    const double cross = (b.u_px - a.u_px) * (c.v_px - b.v_px) - (b.v_px - a.v_px) * (c.u_px - b.u_px);
    if (cross > 0.0) ++positive;
    else if (cross < 0.0) ++negative;
  }
  return positive == 4 || negative == 4;
}

Eigen::Matrix3d rectangle_to_quad(const Quad& src, int out_w, int out_h) {
  const double w = out_w - 1, h = out_h - 1;
  const std::array<Eigen::Vector2d, 4> rect = {
      Eigen::Vector2d(0, 0), Eigen::Vector2d(w, 0), Eigen::Vector2d(w, h), Eigen::Vector2d(0, h)};
  Eigen::Matrix<double, 8, 8> m;
  Eigen::Matrix<double, 8, 1> rhs;
  for (int i = 0; i < 4; ++i) {
    const double x = rect[static_cast<std::size_t>(i)].x(), y = rect[static_cast<std::size_t>(i)].y();
    const double u = src.corners[static_cast<std::size_t>(i)].u_px;
    const double v = src.corners[static_cast<std::size_t>(i)].v_px;
    m.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    m.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    rhs(2 * i) = u;
    rhs(2 * i + 1) = v;
  }
  const Eigen::Matrix<double, 8, 1> sol = m.fullPivLu().solve(rhs);
  Eigen::Matrix3d hq;
  hq << sol(0), sol(1), sol(2),
        sol(3), sol(4), sol(5),
        sol(6), sol(7), 1.0;
  return hq;
}

template <typename T>
Grid<T> warp_perspective(const Grid<T>& input, const Quad& src, int out_w, int out_h) {
  if (out_w < 2 || out_h < 2) {
    throw Error(ErrorCode::InvalidConfig, "output size must be at least 2x2");
  }
  if (!is_strictly_convex(src)) throw Error(ErrorCode::NonConvexQuad, "source quad is not strictly convex");
  const Eigen::Matrix3d hq = rectangle_to_quad(src, out_w, out_h);
  Grid<T> out(out_w, out_h);
  for (int j = 0; j < out_h; ++j) {
    for (int i = 0; i < out_w; ++i) {
      const Eigen::Vector3d p = hq * Eigen::Vector3d(i, j, 1.0);
      if (std::abs(p.z()) < kInfinityThreshold) continue;
      out.at(i, j) = static_cast<T>(sample_bilinear(input, p.x() / p.z(), p.y() / p.z()));
    }
  }
  return out;
}

template Grid<float> warp_perspective(const Grid<float>&, const Quad&, int, int);
template Grid<double> warp_perspective(const Grid<double>&, const Quad&, int, int);

std::vector<Correspondence> read_correspondences(const std::filesystem::path& path) {
  const auto rows = detail::read_numeric_csv(path, "x_mm,y_mm,u_px,v_px");
  std::vector<Correspondence> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({{r[0], r[1]}, {r[2], r[3]}});
  return out;
}

void write_correspondences(const std::filesystem::path& path, std::span<const Correspondence> points) {
  std::string text = "x_mm,y_mm,u_px,v_px\n";
  for (const auto& c : points) {
    text += detail::format_exact(c.world.x_mm) + ',' + detail::format_exact(c.world.y_mm) + ',' +
            detail::format_exact(c.pixel.u_px) + ',' + detail::format_exact(c.pixel.v_px) + '\n';
  }
  detail::write_text_file(path, text);
}

}  // namespace taxelmap::geometry
