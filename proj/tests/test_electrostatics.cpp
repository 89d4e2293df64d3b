#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "casimir/electrostatics.hpp"

using namespace casimir;

namespace {

constexpr double kRadius = 60.35e-6;

double proximity_gradient(double a, double radius, double v) {
  return std::numbers::pi * kVacuumPermittivity * radius * v * v / (a * a);
}

}  // namespace

TEST(Electrostatics, ZeroVoltage) {
  EXPECT_EQ(electrostatic_gradient(250e-9, kRadius, 0.0), 0.0);
  EXPECT_THROW(electrostatic_gradient(kRadius, kRadius, 0.0), ConfigError);
}

TEST(Electrostatics, EvenInVoltage) {
  EXPECT_EQ(electrostatic_gradient(300e-9, kRadius, 0.05), electrostatic_gradient(300e-9, kRadius, -0.05));
}

TEST(Electrostatics, ProximityLimit) {
  const double a = 1e-4 * kRadius;
  EXPECT_NEAR(electrostatic_gradient(a, kRadius, 0.1) / proximity_gradient(a, kRadius, 0.1), 1.0, 2e-3);
  // Force itself tends to -pi eps0 R V^2 / a.
  const double x = electrostatic_force_coefficient(a, kRadius);
  EXPECT_NEAR(-x * a / (std::numbers::pi * kVacuumPermittivity * kRadius), 1.0, 2e-3);
}

TEST(Electrostatics, PositiveAndDecreasing) {
  double prev = std::numeric_limits<double>::infinity();
  for (double a = 100e-9; a < 0.9 * kRadius; a *= 1.3) {
    const double g = electrostatic_gradient_coefficient(a, kRadius);
    EXPECT_GT(g, 0.0);
    EXPECT_LT(g, prev);
    prev = g;
  }
}

TEST(Electrostatics, DerivativeMatchesFiniteDifference) {
  for (double t : {1e-3, 4e-3, 0.05, 0.5}) {
    const double a = t * kRadius;
    const double h = 1e-5 * a;
    const double fd = (electrostatic_force_coefficient(a + h, kRadius) -
                       electrostatic_force_coefficient(a - h, kRadius)) /
                      (2.0 * h);
    EXPECT_NEAR(fd / electrostatic_gradient_coefficient(a, kRadius), 1.0, 1e-8) << t;
  }
}

TEST(Electrostatics, SeriesTruncationStable) {
  ElectrostaticSettings doubled;
  doubled.term_multiplier = 2;
  for (double t : {1e-4, 1e-3, 1e-2, 0.1, 0.5}) {
    const double a = t * kRadius;
    const double base = electrostatic_gradient_coefficient(a, kRadius);
    EXPECT_NEAR(electrostatic_gradient_coefficient(a, kRadius, doubled) / base, 1.0, 1e-10) << t;
  }
}

TEST(Electrostatics, SmallArgumentSeriesMatchesClosedForm) {
  for (double x : {0.02, 0.05, 0.0999}) {
    EXPECT_NEAR(detail::coth_minus_inverse(x), 1.0 / std::tanh(x) - 1.0 / x, 1e-12);
    const double s = std::sinh(x);
    EXPECT_NEAR(detail::coth_minus_inverse_derivative(x), 1.0 / (x * x) - 1.0 / (s * s), 1e-10);
  }
  EXPECT_NEAR(detail::coth_minus_inverse(0.1), detail::coth_minus_inverse(std::nextafter(0.1, 0.0)), 1e-15);
}
