#pragma once

// Dirac-model polarization tensor of gapped, doped graphene on the imaginary
// frequency axis.
//
// The tensor is split into the undoped zero-temperature part and a correction
// carrying the temperature and chemical-potential dependence:
//
//   Pi00 = Pi00^(0) + Pi00^(1),   Pi = Pi^(0) + Pi^(1).
//
// The correction is a u-integral over [D, inf) weighted by Fermi factors. Its
// brackets are evaluated in the form
//
//   1 - Re[(1-u^2+2i g u)/sqrt(S)]            = (1-g^2) h00(u)
//   1 - Re[((1+iu/g)^2+(1/g^2-1)D^2)/sqrt(S)] = (1-g^2) hp(u) / g^2
//
// with S = (g + iu)^2 + (1-g^2)(1+D^2), which removes every cancellation at
// g -> 0 and g -> 1 and makes the k_perp^2 scaling of both corrections explicit.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "casimir/error.hpp"
#include "casimir/quadrature.hpp"
#include "casimir/units.hpp"

namespace casimir {

struct GrapheneParams {
  double mu = 0.24;     // chemical potential, eV
  double delta = 0.1;   // energy gap, eV
  double vf_ratio = kDefaultFermiVelocityRatio;

  void validate() const {
    if (!(mu >= 0.0)) throw ConfigError("graphene chemical potential must be >= 0");
    if (!(delta >= 0.0)) throw ConfigError("graphene energy gap must be >= 0");
    if (!(vf_ratio > 0.0 && vf_ratio < 1.0)) throw ConfigError("v_F/c must lie in (0, 1)");
  }
};

/// A point (i xi, k_perp) of the imaginary-frequency spectral plane.
struct SpectralPoint {
  double xi = 0.0;      // rad/s
  double k_perp = 0.0;  // 1/m

  void validate() const {
    if (!(xi >= 0.0)) throw ConfigError(fmt::format("xi must be >= 0, got {}", xi));
    if (!(k_perp > 0.0)) throw ConfigError(fmt::format("k_perp must be > 0, got {}", k_perp));
  }
};

/// Pi00 in J s/m, Pi in J s/m^3.
struct PolarizationComponents {
  double pi00 = 0.0;
  double pi = 0.0;

  friend PolarizationComponents operator+(PolarizationComponents a, PolarizationComponents b) {
    return {a.pi00 + b.pi00, a.pi + b.pi};
  }
  friend PolarizationComponents operator-(PolarizationComponents a, PolarizationComponents b) {
    return {a.pi00 - b.pi00, a.pi - b.pi};
  }
};

struct TensorSettings {
  double relative_tolerance = 1e-10;
  /// Integrate until B u - mu/(k_B T) exceeds this (Fermi factor < e^-cutoff).
  double fermi_cutoff = 40.0;
};

/// Psi(x) = 2 [x + (1 - x^2) arctan(1/x)], Psi(0) = pi.
inline double psi(double x) {
  if (!(x >= 0.0)) throw ConfigError(fmt::format("psi needs x >= 0, got {}", x));
  if (x == 0.0) return kPi;
  if (x < 3.0) return 2.0 * (x + (1.0 - x * x) * std::atan(1.0 / x));
  // Large x: the two terms cancel to O(1/x); use the convergent series
  // 2 sum_n (-1)^n y^(2n+1) 4(n+1)/((2n+1)(2n+3)), y = 1/x.
  const double y = 1.0 / x;
  const double y2 = y * y;
  double term = y;
  double sum = 0.0;
  for (int n = 0; n < 60; ++n) {
    const double c = 4.0 * (n + 1) / ((2.0 * n + 1.0) * (2.0 * n + 3.0));
    const double add = (n % 2 == 0 ? 1.0 : -1.0) * term * c;
    sum += add;
    if (std::abs(add) < 1e-17 * std::abs(sum)) break;
    term *= y2;
  }
  return 2.0 * sum;
}

namespace detail {

/// Dimensionless description of a spectral point for given graphene.
struct TensorKinematics {
  double q_tilde;          // sqrt(vF^2 k^2 + xi^2)/c, 1/m
  double energy;           // hbar c q_tilde, eV
  double gamma;            // xi/(c q_tilde)
  double one_minus_gamma2; // vF^2 k^2 / (vF^2 k^2 + xi^2)
  double gap;              // D = Delta / energy
};

inline TensorKinematics kinematics(const SpectralPoint& p, const GrapheneParams& g) {
  const double vk = g.vf_ratio * kSpeedOfLight * p.k_perp;
  const double norm = std::hypot(vk, p.xi);
  TensorKinematics t{};
  t.q_tilde = norm / kSpeedOfLight;
  t.energy = kHbar * norm / kElectronVolt;
  t.gamma = p.xi / norm;
  t.one_minus_gamma2 = (vk / norm) * (vk / norm);
  t.gap = g.delta / t.energy;
  return t;
}

/// Reduced brackets h00 and hp at u, with Re S supplied by the caller so that
/// it can be formed without cancellation next to its zero.
inline std::pair<double, double> brackets(double u, double re_s, double gamma, double gap) {
  using C = std::complex<double>;
  const C root = std::sqrt(C(re_s, 2.0 * gamma * u));
  const double inv = root == 0.0 ? std::numeric_limits<double>::infinity() : (1.0 / root).real();
  const double shifted = (1.0 / (root + C(gamma, u))).real();
  const double d2 = gap * gap;
  const double h00 = 1.0 / (1.0 + gamma) - (1.0 + d2) * shifted + (d2 == 0.0 ? 0.0 : d2 * inv);
  const double hp = inv - gamma / (1.0 + gamma) - (1.0 + d2) * shifted;
  return {h00, hp};
}

inline double fermi(double x) {
  if (x > 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (std::exp(x) + 1.0);
}

/// Integrals of weight(u) * {h00, hp} over [lo, hi]. Panels next to the
/// zero u_s of Re S (an inverse-square-root singularity when gamma = 0) are
/// integrated in t with u = u_s -/+ t^2.
template <class Weight>
quadrature::Values<2> bracket_integrals(const TensorKinematics& kin, double lo, double hi,
                                        std::vector<double> extra_breaks, const Weight& weight,
                                        double rel_tol) {
  quadrature::Values<2> total{0.0, 0.0};
  if (!(hi > lo)) return total;
  const double gamma = kin.gamma;
  const double gap = kin.gap;
  const double c0 = 1.0 + gap * gap * kin.one_minus_gamma2;
  const double us = std::sqrt(c0);

  quadrature::Tolerance tol;
  tol.relative = rel_tol;
  tol.max_intervals = 6000;

  auto plain = [&](double u) {
    const auto [h00, hp] = brackets(u, c0 - u * u, gamma, gap);
    const double w = weight(u);
    return quadrature::Values<2>{w * h00, w * hp};
  };
  auto accumulate = [&](const quadrature::Result<2>& r) {
    total[0] += r.value[0];
    total[1] += r.value[1];
  };
  auto panel_breaks = [&](double a, double b) {
    std::vector<double> br{a};
    for (double x : extra_breaks) {
      if (x > a && x < b) br.push_back(x);
    }
    br.push_back(b);
    std::sort(br.begin(), br.end());
    return br;
  };

  if (!(us > lo && us < hi)) {
    accumulate(quadrature::integrate_panels<2>(plain, panel_breaks(lo, hi), tol));
    return total;
  }

  const double w_left = std::min(us - lo, 0.5 * us);
  const double w_right = std::min(hi - us, 0.5 * us);
  if (us - w_left > lo) accumulate(quadrature::integrate_panels<2>(plain, panel_breaks(lo, us - w_left), tol));
  if (us + w_right < hi) accumulate(quadrature::integrate_panels<2>(plain, panel_breaks(us + w_right, hi), tol));

  auto t_breaks = [&](double width, int side) {
    std::vector<double> br{0.0};
    for (double x : extra_breaks) {
      const double d = side * (x - us);
      if (d > 0.0 && d < width) br.push_back(std::sqrt(d));
    }
    br.push_back(std::sqrt(width));
    std::sort(br.begin(), br.end());
    return br;
  };
  auto left = [&](double t) {
    const double t2 = t * t;
    const double u = us - t2;
    const auto [h00, hp] = brackets(u, t2 * (2.0 * us - t2), gamma, gap);
    const double w = 2.0 * t * weight(u);
    return quadrature::Values<2>{w * h00, w * hp};
  };
  auto right = [&](double t) {
    const double t2 = t * t;
    const double u = us + t2;
    const auto [h00, hp] = brackets(u, -t2 * (2.0 * us + t2), gamma, gap);
    const double w = 2.0 * t * weight(u);
    return quadrature::Values<2>{w * h00, w * hp};
  };
  accumulate(quadrature::integrate_panels<2>(left, t_breaks(w_left, -1), tol));
  accumulate(quadrature::integrate_panels<2>(right, t_breaks(w_right, +1), tol));
  return total;
}

inline PolarizationComponents scale_correction(const SpectralPoint& p, const TensorKinematics& kin,
                                               const quadrature::Values<2>& integrals) {
  const double k2 = p.k_perp * p.k_perp;
  PolarizationComponents out;
  out.pi00 = 4.0 * kFineStructure * kHbar * k2 / kin.q_tilde * integrals[0];
  // The xi^2 prefactor makes the transverse correction vanish identically in
  // the static term.
  out.pi = p.xi == 0.0 ? 0.0 : -4.0 * kFineStructure * kHbar * k2 * kin.q_tilde * integrals[1];
  return out;
}

template <class F>
auto with_diagnostics(const SpectralPoint& p, const GrapheneParams& g, double temperature, F&& f) {
  try {
    return f();
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(fmt::format(
        "polarization tensor quadrature failed at xi={:.6g} rad/s, k={:.6g} 1/m, mu={} eV, "
        "Delta={} eV, T={} K: {}",
        p.xi, p.k_perp, g.mu, g.delta, temperature, e.what()));
  }
}

}  // namespace detail

/// Undoped, zero-temperature part: Pi00 = a hbar k^2 Psi(D)/q~,
/// Pi = a hbar k^2 q~ Psi(D).
inline PolarizationComponents pi_undoped_T0(const SpectralPoint& p, const GrapheneParams& g) {
  p.validate();
  g.validate();
  const auto kin = detail::kinematics(p, g);
  const double base = kFineStructure * kHbar * p.k_perp * p.k_perp * psi(kin.gap);
  return {base / kin.q_tilde, base * kin.q_tilde};
}

/// Temperature and chemical-potential correction Pi^(1) at T > 0.
inline PolarizationComponents pi_thermal_correction(const SpectralPoint& p, const GrapheneParams& g,
                                                    double temperature,
                                                    const TensorSettings& s = {}) {
  p.validate();
  g.validate();
  if (!(temperature > 0.0)) throw ConfigError("thermal correction needs T > 0");
  return detail::with_diagnostics(p, g, temperature, [&] {
    const auto kin = detail::kinematics(p, g);
    const double kt = kelvin_to_ev(temperature);
    const double b = kin.energy / (2.0 * kt);
    const double m = g.mu / kt;
    const double lo = kin.gap;
    const double hi = std::max(lo, (s.fermi_cutoff + m) / b);
    auto weight = [b, m](double u) { return detail::fermi(b * u + m) + detail::fermi(b * u - m); };
    std::vector<double> extra;
    if (m > 0.0) extra.push_back(m / b);
    const auto integrals =
        detail::bracket_integrals(kin, lo, hi, extra, weight, s.relative_tolerance);
    return detail::scale_correction(p, kin, integrals);
  });
}

inline PolarizationComponents pi_full(const SpectralPoint& p, const GrapheneParams& g,
                                      double temperature, const TensorSettings& s = {}) {
  return pi_undoped_T0(p, g) + pi_thermal_correction(p, g, temperature, s);
}

/// Zero-temperature tensor: the Fermi factors become a step, so only the
/// kappa = -1 term survives on [D, 2 mu / (hbar c q~)].
inline PolarizationComponents pi_full_T0(const SpectralPoint& p, const GrapheneParams& g,
                                         const TensorSettings& s = {}) {
  const auto undoped = pi_undoped_T0(p, g);
  if (2.0 * g.mu <= g.delta) return undoped;
  return detail::with_diagnostics(p, g, 0.0, [&] {
    const auto kin = detail::kinematics(p, g);
    const double hi = 2.0 * g.mu / kin.energy;
    const auto integrals = detail::bracket_integrals(
        kin, kin.gap, hi, {}, [](double) { return 1.0; }, s.relative_tolerance);
    return undoped + detail::scale_correction(p, kin, integrals);
  });
}

}  // namespace casimir
