#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "taxelmap/geometry.hpp"
#include "taxelmap/pipeline.hpp"
#include "taxelmap/scansim.hpp"

namespace fixture {

/// Self-deleting scratch directory.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "taxelmap") {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Mild perspective over the 40 x 40 mm scan area into a 400 x 400 image.
inline Eigen::Matrix3d camera_h0() {
  Eigen::Matrix3d h;
  h << 9.5, 0.4, 12.0, -0.3, 9.2, 8.0, 1e-4, 2e-4, 1.0;
  return h;
}

/// 12 well-spread calibration targets on the 40 x 40 mm plane.
inline std::vector<taxelmap::geometry::WorldPoint> calibration_targets() {
  return {{0, 0},   {40, 0},  {40, 40}, {0, 40},  {20, 0},  {20, 40},
          {0, 20},  {40, 20}, {10, 10}, {30, 30}, {10, 30}, {30, 12}};
}

inline std::vector<taxelmap::geometry::Correspondence> correspondences(const Eigen::Matrix3d& h, double noise_px,
                                                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, noise_px > 0 ? noise_px : 1.0);
  std::vector<taxelmap::geometry::Correspondence> out;
  for (const auto& p : calibration_targets()) {
    const Eigen::Vector3d q = h * Eigen::Vector3d(p.x_mm, p.y_mm, 1.0);
    double u = q.x() / q.z(), v = q.y() / q.z();
    if (noise_px > 0) {
      u += n(rng);
      v += n(rng);
    }
    out.push_back({p, {u, v}});
  }
  return out;
}

/// 40 x 40 mm checkerboard (10 mm period, 0.1 / 0.5 g), 20 lanes x 8 passes.
inline taxelmap::pipeline::PipelineConfig checkerboard_config() {
  taxelmap::pipeline::PipelineConfig c;
  c.scan = taxelmap::scansim::ScanConfig{};
  c.field = taxelmap::scansim::CheckerboardField{10.0, 0.1, 0.5, 0.0, 0.0};
  return c;
}

}  // namespace fixture
