#include "taxelmap/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "csv.hpp"

namespace taxelmap::pipeline {

std::size_t BuildResult::rejected_count() const {
  return static_cast<std::size_t>(
      std::count_if(passes.begin(), passes.end(), [](const PassReport& r) { return r.rejected; }));
}

BuildResult build_map(const scansim::ScanSession& session, const geometry::CameraProjection& proj,
                      const MapOptions& options) {
  const auto& cfg = session.config;
  BuildResult result;
  std::vector<alignment::PositionedVibration> positioned;

  for (std::size_t k = 0; k < session.passes.size(); ++k) {
    const auto& pass = session.passes[k];
    PassReport report;
    report.index = k;
    report.lane_index = pass.lane_index;
    try {
      auto aligned = alignment::align_pass(pass, cfg.y_len_mm, options.w);
      report.fit_rmse_mm = aligned.fit.rmse_mm;
      report.samples = aligned.samples.size();
      positioned.insert(positioned.end(), aligned.samples.begin(), aligned.samples.end());
    } catch (const Error& e) {
      report.rejected = true;
      report.reason = e.what();
    }
    result.passes.push_back(std::move(report));
  }
  if (positioned.empty()) throw Error(ErrorCode::TooFewSamples, "no pass survived alignment");

  const auto intensities = vibmap::to_intensity(positioned, options.baseline_g);
  const auto sorted = vibmap::sort_by_position(intensities);

  const auto n_bins = static_cast<std::size_t>(std::ceil(cfg.y_len_mm / options.taxel_pitch_mm - 1e-9));
  std::span<const alignment::PositionedVibration> all(sorted);
  std::size_t begin = 0;
  while (begin < all.size()) {
    std::size_t end = begin;
    while (end < all.size() && all[end].x_mm == all[begin].x_mm) ++end;
    result.lanes.push_back(vibmap::bin_taxels(all.subspan(begin, end - begin), all[begin].x_mm, cfg.y_start_mm,
                                              n_bins, options.taxel_pitch_mm));
    begin = end;
  }

  result.raw = vibmap::rasterize(result.lanes, proj, options.width_px, options.height_px, options.stretch_px);
  result.normalized = vibmap::normalize(result.raw);
  return result;
}

void write_projection(const geometry::CalibrationResult& calib, const std::filesystem::path& path) {
  const auto h = calib.projection.coefficients();
  const nlohmann::json j{{"h", h}, {"rmse_px", calib.rmse_px}};
  detail::write_text_file(path, j.dump(2) + "\n");
}

geometry::CalibrationResult read_projection(const std::filesystem::path& path) {
  try {
    const auto j = nlohmann::json::parse(detail::read_text_file(path));
    const auto h = j.at("h").get<std::vector<double>>();
    if (h.size() != 9) throw Error(ErrorCode::ParseError, "projection needs 9 coefficients");
    return {geometry::CameraProjection::from_coefficients(std::span<const double, 9>(h.data(), 9)),
            j.value("rmse_px", 0.0)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void to_json(nlohmann::json& j, const MapOptions& o) {
  j = nlohmann::json{{"width_px", o.width_px},           {"height_px", o.height_px},
                     {"w", o.w},                         {"taxel_pitch_mm", o.taxel_pitch_mm},
                     {"stretch_px", o.stretch_px},       {"baseline_g", o.baseline_g}};
}

void from_json(const nlohmann::json& j, MapOptions& o) {
  const MapOptions d;
  o.width_px = j.value("width_px", d.width_px);
  o.height_px = j.value("height_px", d.height_px);
  o.w = j.value("w", d.w);
  o.taxel_pitch_mm = j.value("taxel_pitch_mm", d.taxel_pitch_mm);
  o.stretch_px = j.value("stretch_px", d.stretch_px);
  o.baseline_g = j.value("baseline_g", d.baseline_g);
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = nlohmann::json{{"scan", c.scan}, {"field", c.field}, {"map", c.map}};
}

void from_json(const nlohmann::json& j, PipelineConfig& c) {
  c.scan = j.value("scan", nlohmann::json::object()).get<scansim::ScanConfig>();
  if (j.contains("field")) c.field = j.at("field").get<scansim::IntensityField>();
  c.map = j.value("map", nlohmann::json::object()).get<MapOptions>();
}

PipelineConfig read_config(const std::filesystem::path& path) {
  PipelineConfig cfg;
  try {
    cfg = nlohmann::json::parse(detail::read_text_file(path)).get<PipelineConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  cfg.scan.validate();
  if (!(cfg.map.w > 0.0 && cfg.map.w <= 0.5)) throw Error(ErrorCode::InvalidConfig, "map.w must satisfy 0 < w <= 0.5");
  if (!(cfg.map.taxel_pitch_mm > 0.0)) throw Error(ErrorCode::InvalidConfig, "map.taxel_pitch_mm must be > 0");
  if (cfg.map.width_px < 1 || cfg.map.height_px < 1) throw Error(ErrorCode::InvalidConfig, "map dimensions must be positive");
  if (cfg.map.stretch_px < 0) throw Error(ErrorCode::InvalidConfig, "map.stretch_px must be >= 0");
  return cfg;
}

}  // namespace taxelmap::pipeline
