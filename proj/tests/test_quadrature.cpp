#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "casimir/error.hpp"
#include "casimir/quadrature.hpp"

using casimir::quadrature::integrate;
using casimir::quadrature::integrate_panels;
using casimir::quadrature::integrate_scalar;
using casimir::quadrature::Tolerance;
using casimir::quadrature::Values;

TEST(Quadrature, Polynomial) {
  // K21 is exact for degree 31.
  const double v = integrate_scalar([](double x) { return std::pow(x, 20); }, 0.0, 1.0);
  EXPECT_NEAR(v, 1.0 / 21.0, 1e-15);
}

TEST(Quadrature, VectorComponentsShareEvaluations) {
  int calls = 0;
  auto r = integrate<2>(
      [&](double x) {
        ++calls;
        return Values<2>{std::exp(-x), std::sin(x)};
      },
      0.0, std::numbers::pi);
  EXPECT_NEAR(r.value[0], 1.0 - std::exp(-std::numbers::pi), 1e-13);
  EXPECT_NEAR(r.value[1], 2.0, 1e-13);
  EXPECT_EQ(static_cast<std::size_t>(calls), r.evaluations);
}

TEST(Quadrature, InverseSquareRootEndpoint) {
  double err = 0.0;
  const double v = integrate_scalar([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0,
                                    {1e-10, 0.0, 4000}, &err);
  EXPECT_NEAR(v, 2.0, 1e-9);
  EXPECT_LT(err, 1e-9);
}

TEST(Quadrature, PanelsAcrossKink) {
  auto f = [](double x) { return Values<1>{std::abs(x - 0.3)}; };
  auto r = integrate_panels<1>(f, {0.0, 0.3, 1.0});
  EXPECT_NEAR(r.value[0], 0.5 * 0.09 + 0.5 * 0.49, 1e-15);
  EXPECT_EQ(r.intervals, 2u);
}

TEST(Quadrature, BudgetExhaustionThrows) {
  Tolerance tol{1e-14, 0.0, 3};
  auto f = [](double x) { return Values<1>{std::sin(1.0 / (x + 1e-3))}; };
  EXPECT_THROW(integrate<1>(f, 0.0, 1.0, tol), casimir::ConvergenceError);
}

TEST(Quadrature, EmptyRangeIsZero) {
  auto r = integrate_panels<1>([](double) { return Values<1>{1.0}; }, {1.0});
  EXPECT_EQ(r.value[0], 0.0);
}
