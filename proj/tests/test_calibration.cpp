#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "casimir/calibration.hpp"

using namespace casimir;

namespace {

constexpr double kRadius = 60.35e-6;
constexpr double kPll = 55.3e-3;

double model_gradient(double a) { return 2.45e-5 * std::pow(250e-9 / a, 3.5); }

std::vector<double> coarse_grid(const CalibrationTruth& t) { return piezo_grid(t.z0, 250e-9, 590e-9, 2e-9); }

std::vector<VoltagePoint> parabola(const std::vector<double>& volts, double c2, double v0, double top) {
  std::vector<VoltagePoint> pts;
  for (double v : volts) pts.push_back({v, c2 * (v - v0) * (v - v0) + top});
  return pts;
}

}  // namespace

TEST(Parabola, NoiselessVertex) {
  const auto fit = fit_parabola(parabola(standard_voltage_plan(0.1324), -1.2e4, 0.1324, -11.0));
  EXPECT_NEAR(fit.v0, 0.1324, 1e-12 * 0.1324);
  EXPECT_NEAR(fit.curvature / -1.2e4, 1.0, 1e-12);
  EXPECT_NEAR(fit.vertex_value / -11.0, 1.0, 1e-12);
  EXPECT_EQ(fit.dof, 18);
}

TEST(Parabola, SymmetricPureQuadratic) {
  const auto fit = fit_parabola(parabola({-0.2, -0.1, 0.0, 0.1, 0.2}, 3.0, 0.0, 0.0));
  EXPECT_NEAR(fit.v0, 0.0, 1e-15);
}

TEST(Parabola, ExactForAnyThreeDistinctVoltages) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> volt(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v{volt(rng), volt(rng), volt(rng)};
    const double c2 = 0.5 + trial;
    const double v0 = volt(rng);
    const auto fit = fit_parabola(parabola(v, c2, v0, 2.0));
    EXPECT_NEAR(fit.v0, v0, 1e-12 * (1.0 + std::abs(v0)));
    EXPECT_NEAR(fit.curvature / c2, 1.0, 1e-12);
  }
}

TEST(Parabola, Degenerate) {
  EXPECT_THROW(fit_parabola(parabola({0.1, 0.1, 0.2, 0.2}, 1.0, 0.0, 0.0)), DataError);
  std::vector<VoltagePoint> line{{0.0, 1.0}, {0.1, 1.2}, {0.2, 1.4}, {0.3, 1.6}};
  EXPECT_THROW(fit_parabola(line), DataError);
}

TEST(Parabola, WeightedMatchesUnweightedForEqualSigma) {
  const auto pts = parabola(standard_voltage_plan(0.13), -1e4, 0.13, 0.0);
  std::vector<double> sigma(pts.size(), 0.5);
  const auto a = fit_parabola(pts);
  const auto b = fit_parabola(pts, &sigma);
  EXPECT_NEAR(a.v0, b.v0, 1e-14);
  const std::vector<double> short_sigma(2, 1.0);
  EXPECT_THROW(fit_parabola(pts, &short_sigma), DataError);
}

TEST(Parabola, NoiseCoverageAndScaling) {
  const auto volts = standard_voltage_plan(0.1324);
  const double c2 = -4.599e5 * 0.0268;
  boost::random::mt19937_64 rng(2024);
  boost::random::normal_distribution<double> gauss;
  int covered = 0;
  double spread1 = 0.0;
  double spread2 = 0.0;
  constexpr int kTrials = 1000;
  for (int t = 0; t < kTrials; ++t) {
    auto p1 = parabola(volts, c2, 0.1324, -11.0);
    auto p2 = p1;
    for (std::size_t i = 0; i < p1.size(); ++i) {
      const double n = gauss(rng);
      p1[i].delta_omega += kPll * n;
      p2[i].delta_omega += 2.0 * kPll * n;
    }
    const auto f1 = fit_parabola(p1);
    const auto f2 = fit_parabola(p2);
    if (std::abs(f1.v0 - 0.1324) <= 3.0 * f1.v0_sigma) ++covered;
    spread1 += (f1.v0 - 0.1324) * (f1.v0 - 0.1324);
    spread2 += (f2.v0 - 0.1324) * (f2.v0 - 0.1324);
  }
  EXPECT_GE(covered, 985);
  EXPECT_NEAR(std::sqrt(spread2 / spread1), 2.0, 0.05);
}

TEST(DriftLine, ConstantAndTwoPoint) {
  const auto flat = drift_line_fit({{250e-9, 0.13}, {300e-9, 0.13}, {400e-9, 0.13}});
  EXPECT_NEAR(flat.slope, 0.0, 1e-12);
  EXPECT_NEAR(flat.intercept, 0.13, 1e-15);
  EXPECT_TRUE(flat.flat);
  const auto two = drift_line_fit({{1.0, 2.0}, {3.0, 8.0}});
  EXPECT_DOUBLE_EQ(two.slope, 3.0);
  EXPECT_DOUBLE_EQ(two.intercept, -1.0);
  EXPECT_THROW(drift_line_fit({{1.0, 2.0}}), DataError);
  EXPECT_THROW(drift_line_fit({{1.0, 2.0}, {1.0, 3.0}}), DataError);
}

TEST(DriftLine, RecoversLinePlusNoise) {
  const double d = 0.1326;
  const double theta = -2.73e-7 / 1e-9;  // V/m
  boost::random::mt19937_64 rng(11);
  boost::random::normal_distribution<double> gauss(0.0, 2e-4);
  std::vector<std::pair<double, double>> series;
  for (double a = 250e-9; a <= 590e-9 + 1e-15; a += 1e-9) series.emplace_back(a, d + theta * a + gauss(rng));
  const auto line = drift_line_fit(series);
  EXPECT_NEAR(line.intercept, d, 4.0 * line.intercept_sigma);
  EXPECT_NEAR(line.slope, theta, 4.0 * line.slope_sigma);
  EXPECT_LT(line.slope_sigma, 1e-4 / 340e-9);
}

TEST(Calibrate, NoiselessRoundTrip) {
  const CalibrationTruth t;
  const auto data = synthesize_dataset(t, model_gradient, standard_voltage_plan(t.v0), {},
                                       coarse_grid(t), kRadius);
  const auto r = calibrate(data);
  EXPECT_NEAR(r.v0 / t.v0, 1.0, 1e-9);
  EXPECT_NEAR(r.z0 / t.z0, 1.0, 1e-9);
  EXPECT_NEAR(r.c_factor / t.c_factor, 1.0, 1e-9);
  EXPECT_TRUE(r.rejected.empty());
  EXPECT_LT(std::abs(r.drift.slope) * (590e-9 - 250e-9), 1e-3);
  ASSERT_EQ(r.per_separation.size(), data.curves.front().z_piezo.size());
  EXPECT_NEAR(r.per_separation.front().separation, 250e-9, 1e-15);
}

TEST(Calibrate, VertexCurveCarriesNoElectrostatics) {
  const CalibrationTruth t;
  const auto grid = coarse_grid(t);
  const auto data = synthesize_dataset(t, model_gradient, {t.v0, 0.1}, {}, grid, kRadius);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    EXPECT_EQ(data.curves[0].delta_omega[j], -t.c_factor * model_gradient(grid[j] + t.z0));
  }
}

TEST(Calibrate, EveryChannelGivesTheSameGradient) {
  const CalibrationTruth t;
  const auto data = synthesize_dataset(t, model_gradient, standard_voltage_plan(t.v0), {},
                                       coarse_grid(t), kRadius);
  const auto r = calibrate(data);
  for (std::size_t j = 0; j < data.curves.front().z_piezo.size(); j += 17) {
    const double a = data.curves.front().z_piezo[j] + r.z0;
    for (const auto& c : data.curves) {
      const double g = gradient_from_shift(c.delta_omega[j], c.applied_voltage, r, a, kRadius);
      EXPECT_NEAR(g / model_gradient(a), 1.0, 1e-9);
    }
  }
}

TEST(Calibrate, GradientFromShiftEdgeCases) {
  CalibrationResult r;
  r.v0 = 0.1324;
  r.z0 = 236.9e-9;
  r.c_factor = 4.599e5;
  EXPECT_DOUBLE_EQ(gradient_from_shift(-10.0, 0.1324, r, 300e-9, kRadius), 10.0 / 4.599e5);
  EXPECT_EQ(gradient_from_shift(0.0, 0.1324, r, 300e-9, kRadius), 0.0);
  r.c_factor = 0.0;
  EXPECT_THROW(gradient_from_shift(0.0, 0.1324, r, 300e-9, kRadius), DataError);
}

TEST(Calibrate, NoisyEndToEnd) {
  const CalibrationTruth t;
  const auto grid = piezo_grid(t.z0, 250e-9, 590e-9, 0.14e-9);
  int inside = 0;
  constexpr int kTrials = 30;
  for (int s = 0; s < kTrials; ++s) {
    const auto data = synthesize_dataset(t, model_gradient, standard_voltage_plan(t.v0),
                                         {kPll, static_cast<std::uint64_t>(s), 0.0}, grid, kRadius);
    const auto r = calibrate(data);
    if (std::abs(r.z0 - t.z0) <= 0.6e-9 && std::abs(r.c_factor - t.c_factor) <= 300.0) ++inside;
    if (s == 0) {
      const auto g = casimir_gradients(data, r);
      int ok = 0;
      for (const auto& p : g) {
        if (std::abs(p.gradient - model_gradient(p.separation)) <= 3.0 * p.random_error) ++ok;
      }
      EXPECT_GT(ok, static_cast<int>(0.97 * g.size()));
    }
  }
  EXPECT_GE(inside, static_cast<int>(0.67 * kTrials));
}

TEST(Calibrate, DriftPlaceholderRoundTrip) {
  const CalibrationTruth t;
  const auto data = synthesize_dataset(t, model_gradient, standard_voltage_plan(t.v0),
                                       {0.0, 0, 1e-3}, coarse_grid(t), kRadius);
  CalibrationOptions opt;
  opt.drift_rate = 1e-3;
  const auto r = calibrate(data, opt);
  EXPECT_NEAR(r.z0 / t.z0, 1.0, 1e-9);
  EXPECT_NEAR(r.v0 / t.v0, 1.0, 1e-9);
}

TEST(Calibrate, CorruptCurveIsReported) {
  const CalibrationTruth t;
  auto data = synthesize_dataset(t, model_gradient, standard_voltage_plan(t.v0), {}, coarse_grid(t), kRadius);
  data.curves[4].delta_omega[10] = std::nan("");
  data.curves[7].z_piezo.pop_back();
  auto shifted = data.curves[2].z_piezo;
  for (auto& z : shifted) z += 1e-10;
  data.curves[2].z_piezo = shifted;
  const auto r = calibrate(data);
  ASSERT_EQ(r.rejected.size(), 3u);
  EXPECT_EQ(r.rejected[0].index, 2u);
  EXPECT_EQ(r.rejected[1].index, 4u);
  EXPECT_EQ(r.rejected[2].index, 7u);
  EXPECT_NEAR(r.z0 / t.z0, 1.0, 1e-9);
}

TEST(Calibrate, TooFewVoltages) {
  const CalibrationTruth t;
  const auto data = synthesize_dataset(t, model_gradient, {0.1, 0.1, 0.15}, {}, coarse_grid(t), kRadius);
  EXPECT_THROW(calibrate(data), DataError);
}

TEST(Dataset, JsonRoundTrip) {
  const CalibrationTruth t;
  const auto data = synthesize_dataset(t, model_gradient, standard_voltage_plan(t.v0), {kPll, 5, 0.0},
                                       coarse_grid(t), kRadius);
  const auto j = to_json(data);
  const auto back = dataset_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(to_json(back), j);
  ASSERT_TRUE(back.truth.has_value());
  EXPECT_EQ(back.truth->z0, t.z0);
  EXPECT_THROW(dataset_from_json(nlohmann::json{{"curves", nlohmann::json::array()}}), DataError);
  auto broken = j;
  broken["curves"][3].erase("voltage_V");
  const auto partial = dataset_from_json(broken);
  EXPECT_FALSE(partial.curves[3].problem().empty());
}

TEST(Calibrate, SpringConstant) {
  EXPECT_NEAR(spring_constant(6.1581e3, 4.599e5), 6.70e-3, 0.005e-3);
  EXPECT_THROW(spring_constant(6.1581e3, 0.0), ConfigError);
}

TEST(Synthesis, DeterministicUnderSeed) {
  const CalibrationTruth t;
  const auto grid = coarse_grid(t);
  const auto a = synthesize_dataset(t, model_gradient, {0.1, 0.12}, {kPll, 9, 0.0}, grid, kRadius);
  const auto b = synthesize_dataset(t, model_gradient, {0.1, 0.12}, {kPll, 9, 0.0}, grid, kRadius);
  const auto c = synthesize_dataset(t, model_gradient, {0.1, 0.12}, {kPll, 10, 0.0}, grid, kRadius);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_NE(to_json(a).dump(), to_json(c).dump());
}
