#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "taxelmap/scansim.hpp"

using namespace taxelmap;
using namespace taxelmap::scansim;

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

ScanConfig small_config() {
  ScanConfig c;
  c.lanes = 2;
  c.passes_per_lane = 4;
  c.y_len_mm = 20.0;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Trapezoid, StartAndMidpoint) {
  ScanConfig c;
  c.y_start_mm = 3.0;
  EXPECT_EQ(trapezoid_position(0.0, c, Direction::PositiveY), 3.0);
  EXPECT_NEAR(trapezoid_position(c.pass_duration_s() / 2, c, Direction::PositiveY), 3.0 + c.y_len_mm / 2, 1e-12);
  EXPECT_EQ(trapezoid_position(0.0, c, Direction::NegativeY), 3.0 + c.y_len_mm);
  EXPECT_NEAR(trapezoid_position(c.pass_duration_s(), c, Direction::PositiveY), 3.0 + c.y_len_mm, 1e-12);
}

TEST(Trapezoid, MatchesNumericQuadrature) {
  ScanConfig c;
  c.accel_mm_s2 = 100.0;
  c.cruise_speed_mm_s = 10.0;
  c.y_len_mm = 100.0;
  const double total = c.pass_duration_s();
  for (int k = 0; k <= 997; ++k) {
    const double t = total * k / 997.0;
    EXPECT_NEAR(trapezoid_position(t, c, Direction::PositiveY), oracle::integrated_distance(t, c), 1e-9) << t;
  }
}

TEST(Trapezoid, NegativeDirectionMirrors) {
  ScanConfig c;
  c.y_start_mm = -4.0;
  for (int k = 0; k <= 100; ++k) {
    const double t = c.pass_duration_s() * k / 100.0;
    const double up = trapezoid_position(t, c, Direction::PositiveY) - c.y_start_mm;
    const double down = trapezoid_position(t, c, Direction::NegativeY) - c.y_start_mm;
    EXPECT_NEAR(up + down, c.y_len_mm, 1e-12);
  }
}

TEST(Trapezoid, ContinuousAtPhaseJunctions) {
  ScanConfig c;
  const double ta = c.accel_time_s(), tb = ta + c.cruise_time_s();
  for (double tj : {ta, tb}) {
    const double left = trapezoid_position(tj - 1e-9, c, Direction::PositiveY);
    const double right = trapezoid_position(tj + 1e-9, c, Direction::PositiveY);
    EXPECT_NEAR(right - left, 2e-9 * c.cruise_speed_mm_s, 1e-10);
  }
}

TEST(Trapezoid, RejectsTimeOutsidePass) {
  ScanConfig c;
  expect_error(ErrorCode::TOutOfRange, [&] { trapezoid_position(-1e-6, c, Direction::PositiveY); });
  expect_error(ErrorCode::TOutOfRange, [&] { trapezoid_position(c.pass_duration_s() + 1e-6, c, Direction::PositiveY); });
}

TEST(Fields, Evaluation) {
  const IntensityField cb = CheckerboardField{10.0, 0.1, 0.5, 0.0, 0.0};
  EXPECT_EQ(cb.eval(2.5, 2.5), 0.1);
  EXPECT_EQ(cb.eval(7.5, 2.5), 0.5);
  EXPECT_EQ(cb.eval(7.5, 7.5), 0.1);
  EXPECT_EQ(cb.eval(12.5, 2.5), 0.1);  // one full period later
  EXPECT_EQ(cb.eval(-2.5, 2.5), 0.5);
  const IntensityField shifted = CheckerboardField{10.0, 0.1, 0.5, 5.0, 0.0};
  EXPECT_EQ(shifted.eval(2.5, 2.5), 0.5);

  const IntensityField sine = SinusoidField{8.0, 0.4};
  EXPECT_NEAR(sine.eval(0, 0), 0.2, 1e-15);
  EXPECT_NEAR(sine.eval(0, 2), 0.4, 1e-15);
  EXPECT_NEAR(sine.eval(0, 6), 0.0, 1e-15);

  const IntensityField step = StepEdgeField{StepEdgeField::Axis::X, 3.0, 0.1, 0.7};
  EXPECT_EQ(step.eval(2.999, 100), 0.1);
  EXPECT_EQ(step.eval(3.0, -100), 0.7);

  expect_error(ErrorCode::InvalidConfig, [] { IntensityField(ConstantField{-0.1}); });
  expect_error(ErrorCode::InvalidConfig, [] { IntensityField(CheckerboardField{0.0, 0.1, 0.5, 0, 0}); });
}

TEST(Config, Validation) {
  ScanConfig c;
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.passes_per_lane = 3;
  expect_error(ErrorCode::InvalidConfig, [&] { bad.validate(); });
  bad = c;
  bad.y_len_mm = 0;
  expect_error(ErrorCode::InvalidConfig, [&] { bad.validate(); });
  bad = c;
  bad.accel_mm_s2 = 1.0;  // needs 50 mm to reach 10 mm/s
  expect_error(ErrorCode::InvalidConfig, [&] { bad.validate(); });
  bad = c;
  bad.robot_rate_hz = 0;
  expect_error(ErrorCode::InvalidConfig, [&] { bad.validate(); });
  bad = c;
  bad.noise_sigma_g = -1;
  expect_error(ErrorCode::InvalidConfig, [&] { simulate_session(IntensityField{}, bad); });
}

TEST(Simulate, FlatFieldReadsExactGravity) {
  auto c = small_config();
  c.noise_sigma_g = 0.0;
  const auto s = simulate_session(ConstantField{0.0}, c);
  for (const auto& p : s.passes) {
    for (const auto& a : p.accel) ASSERT_EQ(a.acc_g, 1.0);
  }
}

TEST(Simulate, ConstantFieldMagnitude) {
  auto c = small_config();
  c.noise_sigma_g = 0.0;
  const double value = 0.37;
  const auto s = simulate_session(ConstantField{value}, c);
  int positive = 0, total = 0;
  for (const auto& p : s.passes) {
    for (const auto& a : p.accel) {
      // One rounding of 1 +/- c separates the stored value from c.
      ASSERT_NEAR(std::abs(a.acc_g - 1.0), value, kEps);
      positive += a.acc_g > 1.0;
      ++total;
    }
  }
  EXPECT_GT(positive, total * 4 / 10);
  EXPECT_LT(positive, total * 6 / 10);
}

TEST(Simulate, CheckerboardFollowsAnalyticTrajectory) {
  auto c = small_config();
  c.lanes = 4;
  c.noise_sigma_g = 0.0;
  const IntensityField field = CheckerboardField{};
  const auto s = simulate_session(field, c);
  for (const auto& p : s.passes) {
    for (std::size_t j = 0; j < p.accel.size(); ++j) {
      const double local = std::min(j / c.accel_rate_hz, c.pass_duration_s());
      ASSERT_NEAR(p.accel[j].t - c.clock_offset_s - p.start_time_s, local, 1e-12);
      const double expected = field.eval(p.x_mm, trapezoid_position(local, c, p.direction));
      ASSERT_NEAR(std::abs(p.accel[j].acc_g - 1.0), expected, kEps);
    }
  }
}

TEST(Simulate, StructureAndClocks) {
  ScanConfig c;
  c.x_origin_mm = 1.5;
  const auto s = simulate_session(IntensityField{}, c);
  ASSERT_EQ(s.passes.size(), static_cast<std::size_t>(c.lanes * c.passes_per_lane));
  const double total = c.pass_duration_s();
  EXPECT_EQ(s.passes[0].robot.size(), static_cast<std::size_t>(std::floor(total * c.robot_rate_hz)) + 1);
  EXPECT_EQ(s.passes[0].accel.size(), static_cast<std::size_t>(std::floor(total * c.accel_rate_hz)) + 1);
  for (std::size_t k = 0; k < s.passes.size(); ++k) {
    const auto& p = s.passes[k];
    EXPECT_EQ(p.x_mm, p.lane_index * c.lane_pitch_mm + c.x_origin_mm);
    EXPECT_EQ(p.direction, p.pass_index % 2 == 0 ? Direction::PositiveY : Direction::NegativeY);
    EXPECT_NEAR(p.start_time_s, k * total, 1e-9);
    for (const auto& r : p.robot) ASSERT_EQ(r.x_mm, p.x_mm);
    const double net = p.robot.back().y_mm - p.robot.front().y_mm;
    EXPECT_EQ(net > 0, p.direction == Direction::PositiveY);
    for (std::size_t i = 1; i < p.robot.size(); ++i) ASSERT_GT(p.robot[i].t, p.robot[i - 1].t);
    for (std::size_t j = 1; j < p.accel.size(); ++j) ASSERT_GT(p.accel[j].t, p.accel[j - 1].t);
  }
}

TEST(Simulate, SampleCountRule) {
  EXPECT_EQ(sample_count(1.0, 125.0), 126u);
  EXPECT_EQ(sample_count(4.1, 1000.0), 4101u);
  EXPECT_EQ(sample_count(0.0, 50.0), 1u);
  EXPECT_EQ(sample_count(0.999, 1.0), 1u);
}

TEST(Simulate, CruiseSamplesLieOnLine) {
  ScanConfig c;
  const auto s = simulate_session(IntensityField{}, c);
  const double ta = c.accel_time_s(), tb = ta + c.cruise_time_s();
  for (const auto& p : s.passes) {
    const double sign = p.direction == Direction::PositiveY ? 1.0 : -1.0;
    const double y_at_ta = trapezoid_position(ta, c, p.direction);
    for (const auto& r : p.robot) {
      const double local = r.t - p.start_time_s;
      if (local <= ta || local >= tb) continue;
      ASSERT_NEAR(r.y_mm, y_at_ta + sign * c.cruise_speed_mm_s * (local - ta), 1e-9);
    }
  }
}

TEST(Simulate, DeterministicPerSeed) {
  auto c = small_config();
  const IntensityField f = CheckerboardField{};
  const auto a = simulate_session(f, c);
  const auto b = simulate_session(f, c);
  ASSERT_EQ(a.passes, b.passes);
  c.seed = 2;
  const auto d = simulate_session(f, c);
  EXPECT_NE(a.passes, d.passes);
}

TEST(Simulate, NoiseHasConfiguredSpread) {
  auto c = small_config();
  c.noise_sigma_g = 0.01;
  const auto s = simulate_session(ConstantField{0.0}, c);
  double sum = 0, sq = 0;
  std::size_t n = 0;
  for (const auto& p : s.passes) {
    for (const auto& a : p.accel) {
      sum += a.acc_g - 1.0;
      sq += (a.acc_g - 1.0) * (a.acc_g - 1.0);
      ++n;
    }
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(mean, 0.0, 5 * 0.01 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(sd, 0.01, 0.0005);
}

TEST(SessionFiles, RoundTripAndDeterministicBytes) {
  fixture::TempDir dir;
  const auto s = simulate_session(CheckerboardField{}, small_config());
  write_session(s, dir / "a");
  write_session(s, dir / "b");
  const auto back = read_session(dir / "a");
  EXPECT_EQ(back.passes, s.passes);
  nlohmann::json cfg_a = back.config, cfg_b = s.config;
  EXPECT_EQ(cfg_a, cfg_b);
  for (const auto& name : {"session.json", "robot_0.csv", "accel_0.csv", "robot_7.csv", "accel_7.csv"}) {
    ASSERT_TRUE(std::filesystem::exists(dir / "a" / name)) << name;
    EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
  }
  EXPECT_EQ(slurp(dir / "a" / "robot_0.csv").substr(0, 11), "t,x_mm,y_mm");
  EXPECT_EQ(slurp(dir / "a" / "accel_0.csv").substr(0, 7), "t,acc_g");
}

TEST(SessionFiles, Errors) {
  fixture::TempDir dir;
  expect_error(ErrorCode::IoError, [&] { read_session(dir / "nope"); });
  write_session(simulate_session(IntensityField{}, small_config()), dir.path());
  {
    std::ofstream(dir / "accel_0.csv") << "t,acc_g\n0,1\n";
  }
  expect_error(ErrorCode::ParseError, [&] { read_session(dir.path()); });
  {
    std::ofstream(dir / "session.json") << "{ not json";
  }
  expect_error(ErrorCode::ParseError, [&] { read_session(dir.path()); });
}

TEST(ConfigJson, RoundTrip) {
  ScanConfig c;
  c.seed = 0x1234567890ULL;
  c.clock_offset_s = -0.002;
  nlohmann::json j = c;
  const auto back = j.get<ScanConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  const auto partial = nlohmann::json{{"lanes", 3}}.get<ScanConfig>();
  EXPECT_EQ(partial.lanes, 3);
  EXPECT_EQ(partial.passes_per_lane, 8);

  for (const IntensityField& f : {IntensityField(ConstantField{0.2}), IntensityField(CheckerboardField{}),
                                  IntensityField(SinusoidField{}), IntensityField(StepEdgeField{})}) {
    nlohmann::json fj = f;
    EXPECT_EQ(nlohmann::json(fj.get<IntensityField>()), fj);
  }
  expect_error(ErrorCode::InvalidConfig, [] { nlohmann::json{{"type", "fractal"}}.get<IntensityField>(); });
}
