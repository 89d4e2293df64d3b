#pragma once

// Sphere-plate electrostatics from the exact bipolar-coordinate capacitance
// series:
//
//   F_el = 2 pi eps0 V^2 sum_{n>=1} csch(n alpha) (coth alpha - n coth n alpha),
//   alpha = arccosh(1 + a/R).
//
// X(a,R) = F_el / V^2 is negative (attraction); dX/da is positive and tends to
// pi eps0 R / a^2 as a/R -> 0.
//
// coth alpha - n coth(n alpha) is evaluated as g(alpha) - n g(n alpha) with
// g(x) = coth x - 1/x, which removes the two 1/alpha poles analytically.

#include <cmath>
#include <cstddef>

#include <fmt/format.h>

#include "casimir/error.hpp"
#include "casimir/units.hpp"

namespace casimir {

struct ElectrostaticSettings {
  double tail_relative = 1e-12;
  /// Series terms beyond the point where the tail criterion first holds.
  int term_multiplier = 1;
  long max_terms = 50'000'000;
};

namespace detail {

// coth x - 1/x
inline double coth_minus_inverse(double x) {
  if (x < 0.1) {
    const double x2 = x * x;
    return x * (1.0 / 3.0 + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (-1.0 / 4725.0 + x2 * 2.0 / 93555.0))));
  }
  return 1.0 / std::tanh(x) - 1.0 / x;
}

// d/dx (coth x - 1/x) = 1/x^2 - csch^2 x
inline double coth_minus_inverse_derivative(double x) {
  const double x2 = x * x;
  if (x < 0.1) {
    return 1.0 / 3.0 + x2 * (-1.0 / 15.0 + x2 * (2.0 / 189.0 + x2 * (-1.0 / 675.0 + x2 * 2.0 / 10395.0)));
  }
  const double s = std::sinh(x);
  return 1.0 / x2 - 1.0 / (s * s);
}

struct SeriesSums {
  double value = 0.0;       // sum csch(n a)(coth a - n coth n a)
  double derivative = 0.0;  // d/d alpha of the same
  long terms = 0;
};

inline SeriesSums capacitance_series(double alpha, const ElectrostaticSettings& s) {
  const double g1 = coth_minus_inverse(alpha);
  const double dg1 = coth_minus_inverse_derivative(alpha);
  const double step = std::exp(-alpha);
  // Terms decay like n^2 e^{-n alpha} once n alpha > 2; the remaining tail is
  // bounded by the current term over (1 - e^{-alpha}).
  const double tail = 1.0 / -std::expm1(-alpha);
  double e = 1.0;
  SeriesSums out;
  long quiet_after = 0;
  for (long n = 1; n <= s.max_terms; ++n) {
    e *= step;  // e^{-n alpha}
    const double x = n * alpha;
    // 1 - e^{-2x}, accurate for small x.
    const double d = x < 0.1 ? -std::expm1(-2.0 * x) : 1.0 - e * e;
    const double csch = 2.0 * e / d;
    const double coth = (2.0 - d) / d;
    const double nd = static_cast<double>(n);
    const double g = x < 0.1 ? coth_minus_inverse(x) : coth - 1.0 / x;
    const double dg = x < 0.1 ? coth_minus_inverse_derivative(x) : 1.0 / (x * x) - csch * csch;
    const double h = g1 - nd * g;
    const double dh = dg1 - nd * nd * dg;
    const double term = csch * h;
    const double dterm = -nd * csch * coth * h + csch * dh;
    out.value += term;
    out.derivative += dterm;
    out.terms = n;
    if (x > 2.0 && tail * std::abs(dterm) < s.tail_relative * std::abs(out.derivative) &&
        tail * std::abs(term) < s.tail_relative * std::abs(out.value)) {
      if (quiet_after == 0) quiet_after = n * s.term_multiplier;
      if (n >= quiet_after) return out;
    }
  }
  throw ConvergenceError(fmt::format("capacitance series did not converge at alpha = {}", alpha));
}

inline double bipolar_alpha(double a, double radius) {
  if (!(a > 0.0 && a < radius)) {
    throw ConfigError(fmt::format("electrostatics needs 0 < a < R, got a = {} m, R = {} m", a, radius));
  }
  // arccosh(1 + t) = log1p(t + sqrt(t (2 + t))), accurate for small t.
  const double t = a / radius;
  return std::log1p(t + std::sqrt(t * (2.0 + t)));
}

}  // namespace detail

/// X(a,R) = F_el / V^2 in N/V^2.
inline double electrostatic_force_coefficient(double a, double radius,
                                              const ElectrostaticSettings& s = {}) {
  const double alpha = detail::bipolar_alpha(a, radius);
  return 2.0 * kPi * kVacuumPermittivity * detail::capacitance_series(alpha, s).value;
}

/// dX/da in N/(m V^2).
inline double electrostatic_gradient_coefficient(double a, double radius,
                                                 const ElectrostaticSettings& s = {}) {
  const double alpha = detail::bipolar_alpha(a, radius);
  const double dalpha_da = 1.0 / (radius * std::sinh(alpha));
  return 2.0 * kPi * kVacuumPermittivity * detail::capacitance_series(alpha, s).derivative * dalpha_da;
}

/// (V_i - V_0)^2 dX/da in N/m.
inline double electrostatic_gradient(double a, double radius, double volt_diff,
                                     const ElectrostaticSettings& s = {}) {
  if (volt_diff == 0.0) {
    detail::bipolar_alpha(a, radius);
    return 0.0;
  }
  return volt_diff * volt_diff * electrostatic_gradient_coefficient(a, radius, s);
}

}  // namespace casimir
