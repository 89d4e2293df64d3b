#pragma once

// Reflection coefficients on the imaginary frequency axis for the Au-vacuum
// boundary (r) and the vacuum/graphene-coated-plate boundary (R).
//
// Sign convention: r_TE <= 0 for eps > 1, r_TM >= 0. The Lifshitz integrand
// only uses the products r_TM R_TM and r_TE R_TE, so only relative signs
// matter; keep both coefficients on this convention.
//
// Every coefficient is evaluated after dividing numerator and denominator by
// powers of k_perp (and hbar), with differences such as eps q - k^(n) written
// in cancellation-free form.

#include <cmath>

#include <fmt/format.h>

#include "casimir/error.hpp"
#include "casimir/material.hpp"
#include "casimir/polarization.hpp"
#include "casimir/units.hpp"

namespace casimir {

struct ReflectionPair {
  double r_tm = 0.0;
  double r_te = 0.0;
};

namespace detail {

struct ReducedWaveNumbers {
  double q;    // q / k_perp
  double kn;   // k^(n) / k_perp
  double x2;   // (xi / (c k_perp))^2
};

inline ReducedWaveNumbers reduced(double xi, double k_perp, double eps) {
  const double x = xi / (kSpeedOfLight * k_perp);
  const double x2 = x * x;
  return {std::sqrt(1.0 + x2), std::sqrt(1.0 + eps * x2), x2};
}

// eps q - k^(n), divided by k_perp.
inline double tm_numerator(const ReducedWaveNumbers& w, double eps) {
  return (eps - 1.0) * (eps + 1.0 + eps * w.x2) / (eps * w.q + w.kn);
}

// q - k^(n), divided by k_perp.
inline double te_numerator(const ReducedWaveNumbers& w, double eps) {
  return (1.0 - eps) * w.x2 / (w.q + w.kn);
}

inline void check_inputs(double xi, double k_perp, const Permittivity& eps) {
  if (!(k_perp > 0.0)) throw ConfigError(fmt::format("k_perp must be > 0, got {}", k_perp));
  if (!(xi >= 0.0)) throw ConfigError(fmt::format("xi must be >= 0, got {}", xi));
  if (!eps.is_infinite() && !(eps.value() >= 1.0)) {
    throw ConfigError(fmt::format("permittivity on the imaginary axis must be >= 1, got {}",
                                  eps.value()));
  }
}

}  // namespace detail

/// r_TM = (eps q - k1)/(eps q + k1), r_TE = (q - k1)/(q + k1).
/// The infinite static permittivity at xi = 0 gives exactly (1, 0); an
/// infinite permittivity at xi > 0 gives the ideal-metal (1, -1).
inline ReflectionPair metal_halfspace_reflection(double xi, double k_perp, const Permittivity& eps1) {
  detail::check_inputs(xi, k_perp, eps1);
  if (eps1.is_infinite()) return xi == 0.0 ? ReflectionPair{1.0, 0.0} : ReflectionPair{1.0, -1.0};
  const double eps = eps1.value();
  const auto w = detail::reduced(xi, k_perp, eps);
  const double tm_num = detail::tm_numerator(w, eps);
  const double te_num = detail::te_numerator(w, eps);
  return {tm_num / (eps * w.q + w.kn), te_num / (w.q + w.kn)};
}

/// R_TM = [hk^2(eps q - k2) + q k2 Pi00] / [hk^2(eps q + k2) + q k2 Pi00],
/// R_TE = [hk^2(q - k2) - Pi] / [hk^2(q + k2) + Pi].
inline ReflectionPair coated_plate_reflection(double xi, double k_perp, const Permittivity& eps2,
                                              const PolarizationComponents& pol) {
  detail::check_inputs(xi, k_perp, eps2);
  if (!(pol.pi00 >= 0.0) || !(pol.pi >= 0.0)) {
    throw ConfigError(fmt::format("polarization tensor components must be >= 0, got ({}, {})",
                                  pol.pi00, pol.pi));
  }
  // Pi00 / (hbar k), Pi / (hbar k^3).
  const double p00 = pol.pi00 / (kHbar * k_perp);
  const double p = pol.pi / (kHbar * k_perp * k_perp * k_perp);
  if (eps2.is_infinite()) {
    if (xi > 0.0) return {1.0, -1.0};
    return {1.0, -p / (2.0 + p)};
  }
  const double eps = eps2.value();
  const auto w = detail::reduced(xi, k_perp, eps);
  const double qk = w.q * w.kn * p00;
  ReflectionPair out;
  if (std::isinf(p00)) {
    out.r_tm = 1.0;
  } else {
    out.r_tm = (detail::tm_numerator(w, eps) + qk) / (eps * w.q + w.kn + qk);
  }
  out.r_te = (detail::te_numerator(w, eps) - p) / (w.q + w.kn + p);
  return out;
}

}  // namespace casimir
