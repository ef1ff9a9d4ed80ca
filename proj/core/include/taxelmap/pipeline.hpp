#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "taxelmap/alignment.hpp"
#include "taxelmap/geometry.hpp"
#include "taxelmap/scansim.hpp"
#include "taxelmap/vibmap.hpp"

namespace taxelmap::pipeline {

struct MapOptions {
  int width_px = 400;
  int height_px = 400;
  double w = alignment::kDefaultCruiseWeight;
  double taxel_pitch_mm = vibmap::kDefaultTaxelPitchMm;
  int stretch_px = vibmap::kDefaultStretchPx;
  double baseline_g = vibmap::kDefaultBaselineG;
};

/// Aggregate configuration read from `--config FILE`.
struct PipelineConfig {
  scansim::ScanConfig scan;
  scansim::IntensityField field;
  MapOptions map;
};

struct PassReport {
  std::size_t index = 0;
  int lane_index = 0;
  bool rejected = false;
  std::string reason;
  double fit_rmse_mm = 0.0;
  std::size_t samples = 0;
};

struct BuildResult {
  std::vector<vibmap::TaxelLane> lanes;
  vibmap::VibrationMap raw;
  vibmap::VibrationMap normalized;
  std::vector<PassReport> passes;

  std::size_t rejected_count() const;
};

/// Aligns every pass, converts to intensity, sorts, bins each lane into
/// taxels starting at y_start, rasterizes and normalizes. A pass that fails
/// alignment is reported and skipped; if none survive, TooFewSamples is thrown.
BuildResult build_map(const scansim::ScanSession& session, const geometry::CameraProjection& proj,
                      const MapOptions& options);

/// Projection file: {"h": [9 row-major coefficients], "rmse_px": x}.
void write_projection(const geometry::CalibrationResult& calib, const std::filesystem::path& path);
geometry::CalibrationResult read_projection(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const MapOptions& o);
void from_json(const nlohmann::json& j, MapOptions& o);
void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

/// Reads and validates a PipelineConfig. Throws InvalidConfig / ParseError.
PipelineConfig read_config(const std::filesystem::path& path);

}  // namespace taxelmap::pipeline
