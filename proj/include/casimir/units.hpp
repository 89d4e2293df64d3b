#pragma once

#include <numbers>

namespace casimir {

// CODATA 2018 exact / recommended values, SI.
inline constexpr double kHbar = 1.054571817e-34;         // J s
inline constexpr double kSpeedOfLight = 299792458.0;     // m/s
inline constexpr double kBoltzmann = 1.380649e-23;       // J/K
inline constexpr double kElectronVolt = 1.602176634e-19; // J
inline constexpr double kVacuumPermittivity = 8.8541878128e-12; // F/m
inline constexpr double kFineStructure = 7.2973525693e-3;

inline constexpr double kPi = std::numbers::pi;

/// Default graphene Fermi velocity as a fraction of c.
inline constexpr double kDefaultFermiVelocityRatio = 1.0 / 300.0;

constexpr double ev_to_rad_per_s(double energy_ev) {
  return energy_ev * kElectronVolt / kHbar;
}

constexpr double rad_per_s_to_ev(double omega) {
  return omega * kHbar / kElectronVolt;
}

constexpr double kelvin_to_ev(double temperature) {
  return kBoltzmann * temperature / kElectronVolt;
}

constexpr double nm(double value) { return value * 1e-9; }
constexpr double um(double value) { return value * 1e-6; }

}  // namespace casimir
