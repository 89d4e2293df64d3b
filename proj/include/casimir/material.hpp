#pragma once

// Dielectric response on the imaginary frequency axis.
//
// Tabulated absorption spectra are carried to eps(i xi) through the
// Kramers-Kronig dispersion integral
//
//   eps(i xi) = 1 + (2/pi) \int_0^\infty  w Im eps(w) / (w^2 + xi^2) dw ,
//
// with log-log (power-law) interpolation between table points, an optional
// Drude extrapolation below the first point and a w^-p decay above the last.
// Analytic Drude and Lorentz-oscillator models are evaluated in closed form.
// All energies are in eV; public frequency arguments are angular frequencies
// in rad/s.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "casimir/error.hpp"
#include "casimir/quadrature.hpp"
#include "casimir/units.hpp"

namespace casimir {

struct DrudeParams {
  double plasma_energy = 9.0;       // eV
  double relaxation_energy = 0.035; // eV

  void validate() const {
    if (!(plasma_energy > 0.0)) throw ConfigError("Drude plasma energy must be > 0");
    if (!(relaxation_energy >= 0.0)) throw ConfigError("Drude relaxation energy must be >= 0");
  }
};

struct LorentzOscillator {
  double strength = 0.0;   // eV^2
  double resonance = 1.0;  // eV
  double damping = 0.0;    // eV
};

struct OpticalPoint {
  double energy = 0.0;  // eV
  double im_eps = 0.0;

  friend bool operator==(const OpticalPoint&, const OpticalPoint&) = default;
};

/// Absorption spectrum Im eps(w) sampled at strictly increasing photon
/// energies. Construction sorts the points and enforces the invariants.
class OpticalTable {
 public:
  OpticalTable(std::vector<OpticalPoint> points, std::string label)
      : points_(std::move(points)), label_(std::move(label)) {
    if (points_.empty()) throw DataError("optical table '" + label_ + "' is empty");
    if (points_.size() < 2) throw DataError("optical table '" + label_ + "' needs at least 2 points");
    std::sort(points_.begin(), points_.end(),
              [](const OpticalPoint& a, const OpticalPoint& b) { return a.energy < b.energy; });
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto& p = points_[i];
      if (!std::isfinite(p.energy) || !(p.energy > 0.0)) {
        throw DataError(fmt::format("optical table '{}': photon energy {} is not positive", label_,
                                    p.energy));
      }
      if (!std::isfinite(p.im_eps) || p.im_eps < 0.0) {
        throw DataError(fmt::format("optical table '{}': Im eps {} at {} eV is negative", label_,
                                    p.im_eps, p.energy));
      }
      if (i > 0 && !(p.energy > points_[i - 1].energy)) {
        throw DataError(fmt::format("optical table '{}': duplicate photon energy {} eV", label_,
                                    p.energy));
      }
    }
  }

  const std::vector<OpticalPoint>& points() const { return points_; }
  const std::string& label() const { return label_; }
  std::size_t size() const { return points_.size(); }
  double first_energy() const { return points_.front().energy; }
  double last_energy() const { return points_.back().energy; }

  /// FNV-1a over the bit patterns of all points; identifies the table in
  /// provenance records.
  std::uint64_t checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](double v) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffU;
        h *= 1099511628211ULL;
      }
    };
    for (const auto& p : points_) {
      mix(p.energy);
      mix(p.im_eps);
    }
    return h;
  }

  /// Im eps at energy w by power-law interpolation (linear where a
  /// neighbouring sample is zero). Only valid inside the table range.
  double interpolate(double w) const {
    auto it = std::upper_bound(points_.begin(), points_.end(), w,
                               [](double x, const OpticalPoint& p) { return x < p.energy; });
    if (it == points_.begin()) return points_.front().im_eps;
    if (it == points_.end()) return points_.back().im_eps;
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    return segment_value(lo, hi, w);
  }

  static double segment_value(const OpticalPoint& lo, const OpticalPoint& hi, double w) {
    if (lo.im_eps > 0.0 && hi.im_eps > 0.0) {
      const double slope = std::log(hi.im_eps / lo.im_eps) / std::log(hi.energy / lo.energy);
      return lo.im_eps * std::pow(w / lo.energy, slope);
    }
    const double t = (w - lo.energy) / (hi.energy - lo.energy);
    return lo.im_eps + t * (hi.im_eps - lo.im_eps);
  }

 private:
  std::vector<OpticalPoint> points_;
  std::string label_;
};

enum class OpticalFormat { ImEps, RefractiveIndex };

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& cell, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw DataError(fmt::format("line {}: malformed number '{}'", line_no, cell));
  }
}

inline std::optional<OpticalFormat> format_from_header(const std::vector<std::string>& cols) {
  if (cols == std::vector<std::string>{"energy_ev", "im_eps"}) return OpticalFormat::ImEps;
  if (cols == std::vector<std::string>{"energy_ev", "n", "k"}) return OpticalFormat::RefractiveIndex;
  return std::nullopt;
}

inline OpticalTable parse_table(std::istream& in, std::optional<OpticalFormat> declared,
                                std::string label) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<OpticalFormat> format;
  std::vector<OpticalPoint> points;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cells = split_csv(t);
    if (!format) {
      format = format_from_header(cells);
      if (!format) throw DataError(fmt::format("line {}: unrecognised header '{}'", line_no, t));
      if (declared && *declared != *format) {
        throw DataError(fmt::format("line {}: header '{}' does not match the declared format",
                                    line_no, t));
      }
      continue;
    }
    const std::size_t expected = *format == OpticalFormat::ImEps ? 2 : 3;
    if (cells.size() != expected) {
      throw DataError(fmt::format("line {}: expected {} columns, found {}", line_no, expected,
                                  cells.size()));
    }
    OpticalPoint p;
    p.energy = parse_number(cells[0], line_no);
    if (*format == OpticalFormat::ImEps) {
      p.im_eps = parse_number(cells[1], line_no);
    } else {
      const double n = parse_number(cells[1], line_no);
      const double k = parse_number(cells[2], line_no);
      if (n < 0.0 || k < 0.0) {
        throw DataError(fmt::format("line {}: negative refractive index component", line_no));
      }
      p.im_eps = 2.0 * n * k;
    }
    points.push_back(p);
  }
  if (!format) throw DataError("optical table '" + label + "' has no header");
  return OpticalTable(std::move(points), std::move(label));
}

}  // namespace detail

/// Reads a CSV optical table whose header must match `format`.
inline OpticalTable load_optical_table(std::istream& in, OpticalFormat format,
                                       std::string label = "") {
  return detail::parse_table(in, format, std::move(label));
}

/// Reads a CSV optical table, taking the format from its header.
inline OpticalTable load_optical_table(std::istream& in, std::string label = "") {
  return detail::parse_table(in, std::nullopt, std::move(label));
}

inline void write_optical_table(std::ostream& out, const OpticalTable& table) {
  out << "# " << table.label() << "\n";
  out << "energy_ev,im_eps\n";
  for (const auto& p : table.points()) out << fmt::format("{:.17g},{:.17g}\n", p.energy, p.im_eps);
}

// --- models ---------------------------------------------------------------

struct TabulatedModel {
  OpticalTable table;
  /// Drude absorption used below the first tabulated energy; none cuts the
  /// integrand off there.
  std::optional<DrudeParams> low_frequency;
  /// Im eps ~ w^-p above the last tabulated energy.
  double tail_exponent = 3.0;
};

struct DrudeModel {
  DrudeParams params;
};

struct LorentzModel {
  std::vector<LorentzOscillator> oscillators;
};

/// eps = infinity at every frequency (ideal-metal limit).
struct PerfectConductor {};

using PermittivityModel = std::variant<TabulatedModel, DrudeModel, LorentzModel, PerfectConductor>;

inline void validate(const PermittivityModel& model) {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DrudeModel>) {
          m.params.validate();
        } else if constexpr (std::is_same_v<T, LorentzModel>) {
          for (const auto& o : m.oscillators) {
            if (!(o.strength >= 0.0)) throw ConfigError("oscillator strength must be >= 0");
            if (!(o.resonance > 0.0)) throw ConfigError("oscillator resonance must be > 0");
            if (!(o.damping >= 0.0)) throw ConfigError("oscillator damping must be >= 0");
          }
        } else if constexpr (std::is_same_v<T, TabulatedModel>) {
          if (m.low_frequency) m.low_frequency->validate();
          if (!(m.tail_exponent > 0.0)) throw ConfigError("tail exponent must be > 0");
        }
      },
      model);
}

/// Value of eps(i xi): either a finite number >= 1 or the distinguished
/// infinite static permittivity of a conductor.
class Permittivity {
 public:
  static Permittivity finite(double value) { return Permittivity(value, false); }
  static Permittivity infinite() { return Permittivity(std::numeric_limits<double>::infinity(), true); }

  bool is_infinite() const { return infinite_; }
  /// The finite value; +inf for the infinite sentinel.
  double value() const { return value_; }

  friend bool operator==(const Permittivity&, const Permittivity&) = default;

 private:
  Permittivity(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

// --- closed forms and absorption profiles ----------------------------------

/// Drude eps(i xi) = 1 + wp^2 / (xi (xi + gamma)), energies in eV.
inline double drude_eps(const DrudeParams& p, double xi_ev) {
  return 1.0 + p.plasma_energy * p.plasma_energy / (xi_ev * (xi_ev + p.relaxation_energy));
}

inline double drude_absorption(const DrudeParams& p, double w_ev) {
  const double g = p.relaxation_energy;
  return p.plasma_energy * p.plasma_energy * g / (w_ev * (w_ev * w_ev + g * g));
}

inline double lorentz_eps(const std::vector<LorentzOscillator>& osc, double xi_ev) {
  double eps = 1.0;
  for (const auto& o : osc) {
    eps += o.strength / (o.resonance * o.resonance + xi_ev * xi_ev + o.damping * xi_ev);
  }
  return eps;
}

inline double lorentz_absorption(const std::vector<LorentzOscillator>& osc, double w_ev) {
  double im = 0.0;
  for (const auto& o : osc) {
    const double d = o.resonance * o.resonance - w_ev * w_ev;
    im += o.strength * o.damping * w_ev / (d * d + o.damping * o.damping * w_ev * w_ev);
  }
  return im;
}

// --- Kramers-Kronig -------------------------------------------------------

struct KramersKronigOptions {
  double relative_tolerance = 1e-12;
  /// Decades integrated beyond the smallest and largest characteristic scale.
  double margin_decades = 14.0;
};

/// (2/pi) \int_0^\infty w A(w)/(w^2 + xi^2) dw for an absorption profile A
/// given on the whole positive axis (energies in eV). The integral is taken in
/// ln w over per-decade panels spanning `scales` (resonances, widths, xi) with
/// a wide margin on both sides.
inline double kramers_kronig_integral(const std::function<double(double)>& absorption,
                                      double xi_ev, std::vector<double> scales,
                                      const KramersKronigOptions& opt = {}) {
  if (xi_ev > 0.0) scales.push_back(xi_ev);
  std::erase_if(scales, [](double s) { return !(s > 0.0); });
  if (scales.empty()) scales.push_back(1.0);
  const auto [lo_it, hi_it] = std::minmax_element(scales.begin(), scales.end());
  const double t_lo = std::log(*lo_it) - opt.margin_decades * std::log(10.0);
  const double t_hi = std::log(*hi_it) + opt.margin_decades * std::log(10.0);
  std::vector<double> breaks;
  const double step = std::log(10.0);
  for (double t = t_lo; t < t_hi; t += step) breaks.push_back(t);
  breaks.push_back(t_hi);
  for (double s : scales) breaks.push_back(std::log(s));
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  const double xi2 = xi_ev * xi_ev;
  auto integrand = [&](double t) {
    const double w = std::exp(t);
    return quadrature::Values<1>{w * w * absorption(w) / (w * w + xi2)};
  };
  quadrature::Tolerance tol;
  tol.relative = opt.relative_tolerance;
  const auto r = quadrature::integrate_panels<1>(integrand, breaks, tol);
  return 2.0 / kPi * r.value[0];
}

namespace detail {

// \int_0^{w0} wp^2 g / ((w^2+g^2)(w^2+xi^2)) dw for xi > 0.
inline double drude_low_segment(const DrudeParams& p, double w0, double xi) {
  const double g = p.relaxation_energy;
  const double wp2 = p.plasma_energy * p.plasma_energy;
  if (g == 0.0) return 0.0;  // collisionless: no absorption at finite w
  auto arc = [w0](double s) { return std::atan(w0 / s) / s; };
  if (std::abs(xi - g) > 1e-4 * g) {
    return wp2 * g * (arc(g) - arc(xi)) / (xi * xi - g * g);
  }
  return quadrature::integrate_scalar(
      [&](double w) { return wp2 * g / ((w * w + g * g) * (w * w + xi * xi)); }, 0.0, w0,
      {1e-13, 0.0, 4000});
}

// \int_{wN}^\infty w A_N (wN/w)^p / (w^2 + xi^2) dw via t = wN/w.
inline double power_tail(double w_n, double a_n, double p, double xi) {
  if (a_n == 0.0) return 0.0;
  const double w2 = w_n * w_n;
  return quadrature::integrate_scalar(
      [&](double t) { return a_n * w2 * std::pow(t, p - 1.0) / (w2 + xi * xi * t * t); }, 0.0,
      1.0, {1e-13, 0.0, 4000});
}

inline double tabulated_eps(const TabulatedModel& m, double xi) {
  const auto& pts = m.table.points();
  double integral = 0.0;
  if (m.low_frequency) integral += drude_low_segment(*m.low_frequency, pts.front().energy, xi);

  std::vector<double> breaks;
  breaks.reserve(pts.size());
  for (const auto& p : pts) breaks.push_back(std::log(p.energy));
  const double xi2 = xi * xi;
  auto integrand = [&](double t) {
    const double w = std::exp(t);
    return quadrature::Values<1>{w * w * m.table.interpolate(w) / (w * w + xi2)};
  };
  quadrature::Tolerance tol;
  tol.relative = 1e-12;
  tol.max_intervals = 40 * pts.size() + 4000;
  integral += quadrature::integrate_panels<1>(integrand, breaks, tol).value[0];
  integral += power_tail(pts.back().energy, pts.back().im_eps, m.tail_exponent, xi);
  return 1.0 + 2.0 / kPi * integral;
}

}  // namespace detail

/// eps(i xi) for angular frequency xi >= 0 (rad/s).
inline Permittivity eps_imaginary_axis(const PermittivityModel& model, double xi) {
  if (!(xi >= 0.0)) throw ConfigError(fmt::format("imaginary frequency must be >= 0, got {}", xi));
  const double xi_ev = rad_per_s_to_ev(xi);
  return std::visit(
      [xi_ev](const auto& m) -> Permittivity {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PerfectConductor>) {
          return Permittivity::infinite();
        } else if constexpr (std::is_same_v<T, DrudeModel>) {
          if (xi_ev == 0.0) return Permittivity::infinite();
          return Permittivity::finite(drude_eps(m.params, xi_ev));
        } else if constexpr (std::is_same_v<T, LorentzModel>) {
          return Permittivity::finite(lorentz_eps(m.oscillators, xi_ev));
        } else {
          if (xi_ev == 0.0 && m.low_frequency && m.low_frequency->relaxation_energy > 0.0) {
            return Permittivity::infinite();
          }
          return Permittivity::finite(detail::tabulated_eps(m, xi_ev));
        }
      },
      model);
}

/// Matsubara frequency xi_l = 2 pi k_B T l / hbar in rad/s.
inline double matsubara_frequency(int l, double temperature) {
  if (l < 0) throw ConfigError("Matsubara index must be >= 0");
  if (!(temperature > 0.0)) throw ConfigError("Matsubara frequencies need T > 0");
  return 2.0 * kPi * kBoltzmann * temperature * l / kHbar;
}

/// A permittivity model plus a thread-safe memo of evaluated frequencies.
/// Copies share the memo.
class Material {
 public:
  explicit Material(PermittivityModel model, std::string name = "")
      : model_(std::make_shared<const PermittivityModel>(std::move(model))),
        cache_(std::make_shared<Cache>()),
        name_(std::move(name)) {
    validate(*model_);
  }

  const PermittivityModel& model() const { return *model_; }
  const std::string& name() const { return name_; }

  /// Tabulated models go through the memo; closed forms are cheap enough to
  /// evaluate directly.
  Permittivity at(double xi) const {
    if (!std::holds_alternative<TabulatedModel>(*model_)) return eps_imaginary_axis(*model_, xi);
    {
      std::shared_lock lock(cache_->mutex);
      auto it = cache_->values.find(xi);
      if (it != cache_->values.end()) return it->second;
    }
    const Permittivity value = eps_imaginary_axis(*model_, xi);
    std::unique_lock lock(cache_->mutex);
    cache_->values.emplace(xi, value);
    return value;
  }

  std::size_t cached_evaluations() const {
    std::shared_lock lock(cache_->mutex);
    return cache_->values.size();
  }

 private:
  struct Cache {
    mutable std::shared_mutex mutex;
    std::unordered_map<double, Permittivity> values;
  };
  std::shared_ptr<const PermittivityModel> model_;
  std::shared_ptr<Cache> cache_;
  std::string name_;
};

inline Permittivity eps_at_matsubara(const Material& material, double temperature, int l) {
  return material.at(matsubara_frequency(l, temperature));
}

// --- bundled sample materials ----------------------------------------------

/// Drude gold with conventional handbook parameters.
inline PermittivityModel sample_gold() { return DrudeModel{DrudeParams{9.0, 0.035}}; }

/// Two-oscillator fused silica: an infrared phonon band and an ultraviolet
/// electronic band (static eps = 3.801).
inline PermittivityModel sample_silica() {
  constexpr double ir = 0.1237;  // eV
  constexpr double uv = 13.38;   // eV
  return LorentzModel{{{1.703 * ir * ir, ir, 0.02}, {1.098 * uv * uv, uv, 1.0}}};
}

// --- JSON ------------------------------------------------------------------

inline nlohmann::json to_json(const PermittivityModel& model) {
  using nlohmann::json;
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PerfectConductor>) {
          return json{{"variant", "perfect_conductor"}};
        } else if constexpr (std::is_same_v<T, DrudeModel>) {
          return json{{"variant", "drude"},
                      {"plasma_energy_ev", m.params.plasma_energy},
                      {"relaxation_energy_ev", m.params.relaxation_energy}};
        } else if constexpr (std::is_same_v<T, LorentzModel>) {
          json osc = json::array();
          for (const auto& o : m.oscillators) {
            osc.push_back({{"strength_ev2", o.strength},
                           {"resonance_ev", o.resonance},
                           {"damping_ev", o.damping}});
          }
          return json{{"variant", "lorentz"}, {"oscillators", osc}};
        } else {
          json pts = json::array();
          for (const auto& p : m.table.points()) pts.push_back({p.energy, p.im_eps});
          json j{{"variant", "tabulated"},
                 {"label", m.table.label()},
                 {"points", pts},
                 {"table_checksum", fmt::format("{:016x}", m.table.checksum())},
                 {"tail_exponent", m.tail_exponent}};
          if (m.low_frequency) {
            j["low_frequency"] = {{"plasma_energy_ev", m.low_frequency->plasma_energy},
                                  {"relaxation_energy_ev", m.low_frequency->relaxation_energy}};
          } else {
            j["low_frequency"] = nullptr;
          }
          return j;
        }
      },
      model);
}

inline PermittivityModel model_from_json(const nlohmann::json& j) {
  try {
    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "perfect_conductor") return PerfectConductor{};
    if (variant == "drude") {
      return DrudeModel{{j.at("plasma_energy_ev").get<double>(),
                         j.at("relaxation_energy_ev").get<double>()}};
    }
    if (variant == "lorentz") {
      LorentzModel m;
      for (const auto& o : j.at("oscillators")) {
        m.oscillators.push_back({o.at("strength_ev2").get<double>(),
                                 o.at("resonance_ev").get<double>(),
                                 o.at("damping_ev").get<double>()});
      }
      return m;
    }
    if (variant == "tabulated") {
      std::vector<OpticalPoint> pts;
      for (const auto& p : j.at("points")) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      OpticalTable table(std::move(pts), j.value("label", std::string{}));
      if (j.contains("table_checksum") &&
          j["table_checksum"].get<std::string>() != fmt::format("{:016x}", table.checksum())) {
        throw DataError("tabulated model checksum mismatch");
      }
      std::optional<DrudeParams> low;
      if (j.contains("low_frequency") && !j["low_frequency"].is_null()) {
        low = DrudeParams{j["low_frequency"].at("plasma_energy_ev").get<double>(),
                          j["low_frequency"].at("relaxation_energy_ev").get<double>()};
      }
      return TabulatedModel{std::move(table), low, j.value("tail_exponent", 3.0)};
    }
    throw DataError("unknown permittivity model variant '" + variant + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed permittivity model JSON: ") + e.what());
  }
}

}  // namespace casimir
