#include <random>

#include <benchmark/benchmark.h>

#include "taxelmap/alignment.hpp"
#include "taxelmap/geometry.hpp"
#include "taxelmap/protocol.hpp"
#include "taxelmap/scansim.hpp"
#include "taxelmap/vibmap.hpp"

using namespace taxelmap;

namespace {

Eigen::Matrix3d camera() {
  Eigen::Matrix3d h;
  h << 9.5, 0.4, 12.0, -0.3, 9.2, 8.0, 1e-4, 2e-4, 1.0;
  return h;
}

std::vector<geometry::Correspondence> points(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  const geometry::CameraProjection p(camera());
  std::vector<geometry::Correspondence> out;
  for (std::size_t i = 0; i < n; ++i) {
    const geometry::WorldPoint w{u(rng), u(rng)};
    out.push_back({w, geometry::project(p, w)});
  }
  return out;
}

void BM_Calibrate(benchmark::State& state) {
  const auto pts = points(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(geometry::calibrate_planar(pts));
}
BENCHMARK(BM_Calibrate)->Arg(12)->Arg(100)->Arg(1000);

void BM_AlignPass(benchmark::State& state) {
  scansim::ScanConfig c;
  c.lanes = 1;
  c.passes_per_lane = 2;
  const auto s = scansim::simulate_session(scansim::CheckerboardField{}, c);
  for (auto _ : state) benchmark::DoNotOptimize(alignment::align_pass(s.passes[0], c.y_len_mm, 0.45));
}
BENCHMARK(BM_AlignPass);

void BM_Rasterize(benchmark::State& state) {
  std::vector<vibmap::TaxelLane> lanes;
  for (int k = 0; k < 20; ++k) {
    vibmap::TaxelLane lane;
    lane.x_mm = 2.0 * k;
    lane.values.assign(40, 0.3);
    lane.counts.assign(40, 100);
    lanes.push_back(lane);
  }
  const geometry::CameraProjection p(camera());
  for (auto _ : state) benchmark::DoNotOptimize(vibmap::rasterize(lanes, p, 400, 400));
}
BENCHMARK(BM_Rasterize);

void BM_EncodeFrame(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(static_cast<std::size_t>(state.range(0)));
  for (auto& v : s) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(protocol::encode_frame(s, 0, 0.0, 0.001F));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncodeFrame)->Arg(64)->Arg(1024);

void BM_MessageRoundTrip(benchmark::State& state) {
  std::vector<double> s(64, 0.25);
  s[3] = 0.75;
  const protocol::Message m = protocol::encode_frame(s, 7, 1.0, 0.001F);
  for (auto _ : state) {
    const auto bytes = protocol::write_message(m);
    benchmark::DoNotOptimize(protocol::read_message(bytes));
  }
}
BENCHMARK(BM_MessageRoundTrip);

}  // namespace

BENCHMARK_MAIN();
