#pragma once

// Lifshitz force gradient between a metal sphere and a (graphene-coated)
// plate in the proximity-force approximation:
//
//   F'(a,T) = 2 k_B T R sum'_l \int_0^\infty q_l k dk
//             sum_{TM,TE} r R e^{-2aq} / (1 - r R e^{-2aq}),
//
// with the l = 0 term halved. At T = 0 the Matsubara sum becomes
// (hbar/pi) \int_0^\infty dxi. The k integral is taken in y = 2 a q, where
// q k dk = q^2 dq = y^2 dy / (2a)^3.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "casimir/error.hpp"
#include "casimir/material.hpp"
#include "casimir/polarization.hpp"
#include "casimir/quadrature.hpp"
#include "casimir/reflection.hpp"
#include "casimir/units.hpp"

namespace casimir {

struct ExperimentGeometry {
  double separation = 250e-9;       // m
  double sphere_radius = 60.35e-6;  // m
  double roughness_sphere = 0.0;    // m
  double roughness_plate = 0.0;     // m

  void validate() const {
    if (!(separation > 0.0 && separation < sphere_radius)) {
      throw ConfigError(fmt::format("separation {} m must lie in (0, R = {} m)", separation,
                                    sphere_radius));
    }
    for (double d : {roughness_sphere, roughness_plate}) {
      if (!(d >= 0.0)) throw ConfigError("roughness amplitudes must be >= 0");
      if (!(d < separation / 10.0)) {
        throw ConfigError(fmt::format("roughness {} m is not small against a = {} m", d, separation));
      }
    }
  }
};

struct SystemSpec {
  ExperimentGeometry geometry;
  Material metal{sample_gold(), "gold"};
  Material substrate{sample_silica(), "silica"};
  std::optional<GrapheneParams> graphene = GrapheneParams{};
  double temperature = 294.0;  // K; 0 selects the frequency-integral form

  void validate() const {
    geometry.validate();
    if (graphene) graphene->validate();
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  }
};

/// Which temperature the graphene tensor is evaluated at.
enum class TensorTemperature {
  System,  // the system temperature (physical result)
  Zero,    // zero-temperature tensor at the Matsubara frequencies
};

struct EngineSettings {
  double k_relative_tolerance = 1e-9;
  double matsubara_relative_tolerance = 1e-9;
  int matsubara_consecutive = 3;
  double xi_relative_tolerance = 1e-8;
  /// Upper end of the y = 2 a q range beyond y_l; e^-41.5 < 1e-18.
  double y_cutoff = 41.5;
  /// Multiplies the hard cap on the Matsubara index.
  double l_max_safety = 4.0;
  TensorSettings tensor;
};

struct GradientResult {
  double value = 0.0;                      // N/m
  int matsubara_terms_used = 0;            // 0 for the T = 0 integral
  double estimated_numerical_error = 0.0;  // N/m
  struct Corrections {
    bool roughness = false;
    bool pfa_lower_bound = false;
  } corrections;
};

namespace detail {

inline double y_integral_limit(double y_low, const EngineSettings& s) { return y_low + s.y_cutoff; }

/// sum over TM, TE of x / (1 - x), x = r R e^{-y}.
inline double mode_sum(const ReflectionPair& r, const ReflectionPair& big_r, double y) {
  const double decay = std::exp(-y);
  double sum = 0.0;
  for (double x : {r.r_tm * big_r.r_tm * decay, r.r_te * big_r.r_te * decay}) sum += x / (1.0 - x);
  return sum;
}

/// Evaluates (2a)^-3 \int y^2 sum_alpha x/(1-x) dy at one imaginary
/// frequency, with x = r R e^{-y}. `error` receives the quadrature estimate.
inline double frequency_term(const SystemSpec& spec, double xi, TensorTemperature mode,
                             const EngineSettings& s, double* error) {
  const double a = spec.geometry.separation;
  const double two_a = 2.0 * a;
  const double y_low = two_a * xi / kSpeedOfLight;
  const Permittivity eps1 = spec.metal.at(xi);
  const Permittivity eps2 = spec.substrate.at(xi);
  const bool zero_t = spec.temperature == 0.0 || mode == TensorTemperature::Zero;

  auto integrand = [&](double y) {
    const double k = std::sqrt((y - y_low) * (y + y_low)) / two_a;
    if (!(k > 0.0)) return quadrature::Values<1>{0.0};
    PolarizationComponents pol;
    if (spec.graphene) {
      const SpectralPoint p{xi, k};
      pol = zero_t ? pi_full_T0(p, *spec.graphene, s.tensor)
                   : pi_full(p, *spec.graphene, spec.temperature, s.tensor);
    }
    const auto r = metal_halfspace_reflection(xi, k, eps1);
    const auto big_r = coated_plate_reflection(xi, k, eps2, pol);
    return quadrature::Values<1>{y * y * mode_sum(r, big_r, y)};
  };

  quadrature::Tolerance tol;
  tol.relative = s.k_relative_tolerance;
  const double y_high = y_integral_limit(y_low, s);
  // Most of the weight sits at y - y_low of order one; give the rule a
  // head start there.
  std::vector<double> breaks{y_low, y_low + 1.0, y_low + 4.0, y_low + 12.0, y_high};
  const auto res = quadrature::integrate_panels<1>(integrand, breaks, tol);
  const double scale = 1.0 / (two_a * two_a * two_a);
  if (error != nullptr) *error = res.error[0] * scale;
  return res.value[0] * scale;
}

inline int matsubara_cap(double a, double temperature, const EngineSettings& s) {
  const double y1 = 2.0 * a * 2.0 * kPi * kBoltzmann * temperature / (kHbar * kSpeedOfLight);
  return static_cast<int>(std::ceil(20.0 / y1) * s.l_max_safety) + 8;
}

inline GradientResult matsubara_sum(const SystemSpec& spec, TensorTemperature mode,
                                    const EngineSettings& s) {
  const double a = spec.geometry.separation;
  const double t = spec.temperature;
  const int cap = matsubara_cap(a, t, s);
  double sum = 0.0;
  double err = 0.0;
  int quiet = 0;
  int l = 0;
  double last = 0.0;
  for (; l <= cap; ++l) {
    double e = 0.0;
    double term = frequency_term(spec, matsubara_frequency(l, t), mode, s, &e);
    if (l == 0) {
      term *= 0.5;
      e *= 0.5;
    }
    sum += term;
    err += e;
    last = term;
    if (l > 0 && std::abs(term) <= s.matsubara_relative_tolerance * std::abs(sum)) {
      if (++quiet >= s.matsubara_consecutive) break;
    } else {
      quiet = 0;
    }
  }
  if (l > cap) {
    throw ConvergenceError(fmt::format(
        "Matsubara sum did not converge within l_max = {} at a = {} m, T = {} K", cap, a, t));
  }
  // Geometric tail bound with ratio e^{-2 a xi_1 / c}.
  const double ratio = std::exp(-2.0 * a * matsubara_frequency(1, t) / kSpeedOfLight);
  err += std::abs(last) * ratio / (1.0 - ratio);

  const double prefactor = 2.0 * kBoltzmann * t * spec.geometry.sphere_radius;
  GradientResult out;
  out.value = prefactor * sum;
  out.estimated_numerical_error = prefactor * err;
  out.matsubara_terms_used = l + 1;
  return out;
}

inline GradientResult frequency_integral(const SystemSpec& spec, const EngineSettings& s) {
  const double a = spec.geometry.separation;
  const double xi_scale = kSpeedOfLight / (2.0 * a);
  double inner_err = 0.0;
  auto integrand = [&](double u) {
    // xi = (c / 2a) u / (1 - u) maps [0, 1) onto [0, inf).
    const double xi = xi_scale * u / (1.0 - u);
    if (2.0 * a * xi / kSpeedOfLight > s.y_cutoff) return quadrature::Values<1>{0.0};
    const double jac = xi_scale / ((1.0 - u) * (1.0 - u));
    double e = 0.0;
    const double v = frequency_term(spec, xi, TensorTemperature::Zero, s, &e);
    inner_err += std::abs(e * jac);
    return quadrature::Values<1>{v * jac};
  };
  quadrature::Tolerance tol;
  tol.relative = s.xi_relative_tolerance;
  std::vector<double> breaks{0.0, 0.1, 0.3, 0.6, 1.0};
  const auto res = quadrature::integrate_panels<1>(integrand, breaks, tol);
  const double prefactor = kHbar * spec.geometry.sphere_radius / kPi;
  GradientResult out;
  out.value = prefactor * res.value[0];
  // Inner errors are summed over every node, which overstates them; scale by
  // the mean node weight.
  const double mean_weight = 1.0 / std::max<std::size_t>(res.evaluations, 1);
  out.estimated_numerical_error = prefactor * (res.error[0] + inner_err * mean_weight);
  return out;
}

}  // namespace detail

/// Unit-free Matsubara frequency helper re-exported for the engine API.
using casimir::matsubara_frequency;

/// Force gradient from the Lifshitz formula, without roughness or PFA
/// corrections. `mode` selects the temperature of the graphene tensor.
inline GradientResult force_gradient(const SystemSpec& spec, const EngineSettings& s = {},
                                     TensorTemperature mode = TensorTemperature::System) {
  spec.validate();
  if (spec.temperature == 0.0) return detail::frequency_integral(spec, s);
  return detail::matsubara_sum(spec, mode, s);
}

/// 1 + 10 (ds^2 + dg^2) / a^2.
inline double roughness_factor(double a, double delta_s, double delta_g) {
  if (!(a > 0.0)) throw ConfigError("separation must be > 0");
  return 1.0 + 10.0 * (delta_s * delta_s + delta_g * delta_g) / (a * a);
}

/// Largest PFA correction factor 1 - a/R, applied to lower band edges.
inline double pfa_lower_bound_factor(double a, double radius) {
  if (!(a > 0.0 && a < radius)) throw ConfigError("PFA factor needs 0 < a < R");
  return 1.0 - a / radius;
}

/// Force gradient with the roughness correction applied.
inline GradientResult roughness_corrected_gradient(const SystemSpec& spec,
                                                   const EngineSettings& s = {}) {
  auto r = force_gradient(spec, s);
  const auto& g = spec.geometry;
  const double f = roughness_factor(g.separation, g.roughness_sphere, g.roughness_plate);
  r.value *= f;
  r.estimated_numerical_error *= f;
  r.corrections.roughness = true;
  return r;
}

struct BandEdges {
  GrapheneParams upper{0.25, 0.0, kDefaultFermiVelocityRatio};
  GrapheneParams lower{0.23, 0.2, kDefaultFermiVelocityRatio};
  /// Optional symmetric fractional widening of the band; off by default.
  double padding = 0.0;
};

struct TheoryBand {
  double lower = 0.0;  // N/m
  double upper = 0.0;  // N/m
  GradientResult lower_result;
  GradientResult upper_result;
};

/// Theory band at separation a: the upper edge uses the graphene parameters
/// that maximise F', the lower edge those that minimise it, further scaled by
/// 1 - a/R. Both edges carry the roughness correction.
inline TheoryBand theory_band(SystemSpec spec, double a, const BandEdges& edges = {},
                              const EngineSettings& s = {}) {
  spec.geometry.separation = a;
  const double vf = spec.graphene ? spec.graphene->vf_ratio : kDefaultFermiVelocityRatio;
  TheoryBand band;
  spec.graphene = edges.upper;
  spec.graphene->vf_ratio = vf;
  band.upper_result = roughness_corrected_gradient(spec, s);
  spec.graphene = edges.lower;
  spec.graphene->vf_ratio = vf;
  band.lower_result = roughness_corrected_gradient(spec, s);
  const double pfa = pfa_lower_bound_factor(a, spec.geometry.sphere_radius);
  band.lower_result.value *= pfa;
  band.lower_result.estimated_numerical_error *= pfa;
  band.lower_result.corrections.pfa_lower_bound = true;
  band.upper = band.upper_result.value * (1.0 + edges.padding);
  band.lower = band.lower_result.value * (1.0 - edges.padding);
  return band;
}

/// Central graphene parameters used where a single value is reported.
inline GrapheneParams central_graphene() { return {0.24, 0.1, kDefaultFermiVelocityRatio}; }

/// [F'(a,T) - F'(a,0)] / F'(a,T).
inline double thermal_fraction(SystemSpec spec, double a, const EngineSettings& s = {}) {
  if (!(spec.temperature > 0.0)) throw ConfigError("thermal fraction needs T > 0");
  spec.geometry.separation = a;
  if (!spec.graphene) spec.graphene = central_graphene();
  const double f_t = force_gradient(spec, s).value;
  spec.temperature = 0.0;
  const double f_0 = force_gradient(spec, s).value;
  return (f_t - f_0) / f_t;
}

struct MatsubaraDecomposition {
  double implicit_fraction = 0.0;
  double explicit_fraction = 0.0;
  double thermal_fraction = 0.0;
  double gradient_t = 0.0;       // F'(a, T)
  double gradient_zero = 0.0;    // F'(a, 0)
  double gradient_hybrid = 0.0;  // Matsubara sum at T with the T = 0 tensor
};

/// Splits the thermal correction into the part from Matsubara sampling
/// (implicit) and the part from the tensor's own temperature dependence
/// (explicit).
inline MatsubaraDecomposition matsubara_decomposition(SystemSpec spec, double a,
                                                      const EngineSettings& s = {}) {
  if (!(spec.temperature > 0.0)) throw ConfigError("decomposition needs T > 0");
  spec.geometry.separation = a;
  if (!spec.graphene) spec.graphene = central_graphene();
  MatsubaraDecomposition d;
  d.gradient_t = force_gradient(spec, s).value;
  d.gradient_hybrid = force_gradient(spec, s, TensorTemperature::Zero).value;
  const double t = spec.temperature;
  spec.temperature = 0.0;
  d.gradient_zero = force_gradient(spec, s).value;
  spec.temperature = t;
  const double total = d.gradient_t - d.gradient_zero;
  d.thermal_fraction = total / d.gradient_t;
  d.implicit_fraction = (d.gradient_hybrid - d.gradient_zero) / total;
  d.explicit_fraction = 1.0 - d.implicit_fraction;
  return d;
}

struct CharacteristicScales {
  double t_eff = 0.0;           // K
  double t_eff_graphene = 0.0;  // K
  double lambda_t = 0.0;        // m
  double hbar_omega_c = 0.0;    // eV
};

inline CharacteristicScales characteristic_scales(double a, double temperature,
                                                  double vf_ratio = kDefaultFermiVelocityRatio) {
  if (!(a > 0.0)) throw ConfigError("separation must be > 0");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  CharacteristicScales c;
  c.t_eff = kHbar * kSpeedOfLight / (2.0 * a * kBoltzmann);
  c.t_eff_graphene = kHbar * vf_ratio * kSpeedOfLight / (2.0 * a * kBoltzmann);
  c.lambda_t = 2.0 * kPi * kHbar * kSpeedOfLight / (kBoltzmann * temperature);
  c.hbar_omega_c = kHbar * kSpeedOfLight / (2.0 * a) / kElectronVolt;
  return c;
}

/// mu = hbar v_F sqrt(pi n), n in 1/m^2, result in eV.
inline double chemical_potential_from_density(double n, double vf_ratio = kDefaultFermiVelocityRatio) {
  if (!(n >= 0.0)) throw ConfigError("carrier density must be >= 0");
  return kHbar * vf_ratio * kSpeedOfLight * std::sqrt(kPi * n) / kElectronVolt;
}

}  // namespace casimir
