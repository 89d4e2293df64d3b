#pragma once

// Electrostatic calibration of the dynamic AFM measurement. In the linear
// regime
//
//   delta_omega = -C [F'(a) + (V - V0)^2 dX/da],   a = z_piezo + z0,
//
// so at each piezo position the shift is a parabola in the applied voltage.
// Its vertex gives V0 and its curvature -C dX/da; (z0, C) follow from a global
// fit of the curvature series.
//
// Mechanical drift is represented by a linear-in-time offset on delta_omega
// (rate per sample, samples taken from the largest separation downward). It
// is a placeholder: synthesis adds it and calibration subtracts a given rate.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "casimir/electrostatics.hpp"
#include "casimir/error.hpp"
#include "casimir/units.hpp"

namespace casimir {

struct ShiftCurve {
  double applied_voltage = 0.0;      // V
  std::vector<double> z_piezo;       // m, strictly increasing
  std::vector<double> delta_omega;   // rad/s

  /// Empty string when valid, otherwise the reason.
  std::string problem() const {
    if (!std::isfinite(applied_voltage)) return "applied voltage is not finite";
    if (z_piezo.size() != delta_omega.size()) {
      return fmt::format("{} piezo positions but {} frequency shifts", z_piezo.size(),
                         delta_omega.size());
    }
    if (z_piezo.size() < 2) return "fewer than 2 samples";
    for (std::size_t i = 0; i < z_piezo.size(); ++i) {
      if (!std::isfinite(z_piezo[i]) || !std::isfinite(delta_omega[i])) {
        return fmt::format("non-finite value at sample {}", i);
      }
      if (i > 0 && !(z_piezo[i] > z_piezo[i - 1])) {
        return fmt::format("z_piezo not strictly increasing at sample {}", i);
      }
    }
    return {};
  }
};

struct CalibrationTruth {
  double v0 = 0.1324;        // V
  double z0 = 236.9e-9;      // m
  double c_factor = 4.599e5; // s/kg
};

struct NoiseSpec {
  double sigma = 0.0;        // rad/s
  std::uint64_t seed = 0;
  double drift_rate = 0.0;   // rad/s per sample
};

struct ShiftDataset {
  double sphere_radius = 60.35e-6;  // m
  std::vector<ShiftCurve> curves;
  std::optional<CalibrationTruth> truth;
  NoiseSpec noise;
};

// ---------------------------------------------------------------------------
// Parabola fit

struct VoltagePoint {
  double voltage = 0.0;
  double delta_omega = 0.0;
};

struct ParabolaFit {
  double v0 = 0.0;            // vertex position, V
  double curvature = 0.0;     // c2, rad/(s V^2)
  double vertex_value = 0.0;  // rad/s
  double v0_sigma = 0.0;
  double curvature_sigma = 0.0;
  double residual_rms = 0.0;
  double chi2 = 0.0;
  int dof = 0;
};

/// Least squares of delta_omega = c2 V^2 + c1 V + c0. With `sigma` the rows
/// are weighted by 1/sigma_i and the uncertainties use the given errors;
/// otherwise they use the residual variance.
inline ParabolaFit fit_parabola(const std::vector<VoltagePoint>& points,
                                const std::vector<double>* sigma = nullptr) {
  const std::size_t n = points.size();
  if (sigma != nullptr && sigma->size() != n) throw DataError("sigma size does not match points");
  std::vector<double> distinct;
  for (const auto& p : points) {
    if (!std::isfinite(p.voltage) || !std::isfinite(p.delta_omega)) {
      throw DataError("non-finite point in parabola fit");
    }
    distinct.push_back(p.voltage);
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) {
    throw DataError(fmt::format("parabola fit needs >= 3 distinct voltages, got {}", distinct.size()));
  }

  // Centred and scaled abscissa u = (V - Vm) / s.
  double vm = 0.0;
  for (const auto& p : points) vm += p.voltage;
  vm /= static_cast<double>(n);
  double s = 0.0;
  for (const auto& p : points) s = std::max(s, std::abs(p.voltage - vm));

  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = sigma != nullptr ? 1.0 / (*sigma)[i] : 1.0;
    if (!(w > 0.0) || !std::isfinite(w)) throw DataError("sigma entries must be > 0");
    const double u = (points[i].voltage - vm) / s;
    a(i, 0) = w * u * u;
    a(i, 1) = w * u;
    a(i, 2) = w;
    b(i) = w * points[i].delta_omega;
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::Vector3d beta = qr.solve(b);
  const Eigen::Matrix3d r = qr.matrixQR().topLeftCorner(3, 3).triangularView<Eigen::Upper>();
  const Eigen::Matrix3d r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::Matrix3d::Identity());
  Eigen::Matrix3d cov = r_inv * r_inv.transpose();

  ParabolaFit fit;
  fit.dof = static_cast<int>(n) - 3;
  const Eigen::VectorXd res = b - a * beta;
  fit.chi2 = res.squaredNorm();
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (points[i].voltage - vm) / s;
    const double d = points[i].delta_omega - (beta(0) * u * u + beta(1) * u + beta(2));
    rss += d * d;
  }
  fit.residual_rms = std::sqrt(rss / static_cast<double>(n));
  if (sigma == nullptr) cov *= fit.dof > 0 ? fit.chi2 / fit.dof : 0.0;

  const double b2 = beta(0);
  const double b1 = beta(1);
  const double b2_sigma = std::sqrt(cov(0, 0));
  if (b2 == 0.0 || std::abs(b2) <= 2.0 * b2_sigma) {
    throw DataError(fmt::format("parabola curvature is consistent with zero ({} +- {})", b2 / (s * s),
                                b2_sigma / (s * s)));
  }
  const double u0 = -b1 / (2.0 * b2);
  fit.v0 = vm + s * u0;
  fit.curvature = b2 / (s * s);
  fit.curvature_sigma = b2_sigma / (s * s);
  fit.vertex_value = beta(2) - b1 * b1 / (4.0 * b2);
  const double d1 = -1.0 / (2.0 * b2);
  const double d2 = b1 / (2.0 * b2 * b2);
  const double var_u0 = d1 * d1 * cov(1, 1) + d2 * d2 * cov(0, 0) + 2.0 * d1 * d2 * cov(0, 1);
  fit.v0_sigma = s * std::sqrt(std::max(var_u0, 0.0));
  return fit;
}

// ---------------------------------------------------------------------------
// Drift line

struct DriftLine {
  double intercept = 0.0;  // V
  double slope = 0.0;      // V/m
  double intercept_sigma = 0.0;
  double slope_sigma = 0.0;
  double scatter = 0.0;    // rms residual, V
  double range = 0.0;      // a_max - a_min, m
  bool flat = false;       // |slope| * range below the scatter
};

/// Ordinary least squares v0 = d + theta a.
inline DriftLine drift_line_fit(const std::vector<std::pair<double, double>>& series) {
  const std::size_t n = series.size();
  if (n < 2) throw DataError("drift line needs >= 2 points");
  double am = 0.0;
  double vm = 0.0;
  for (const auto& [a, v] : series) {
    am += a;
    vm += v;
  }
  am /= static_cast<double>(n);
  vm /= static_cast<double>(n);
  double saa = 0.0;
  double sav = 0.0;
  double lo = series.front().first;
  double hi = lo;
  for (const auto& [a, v] : series) {
    saa += (a - am) * (a - am);
    sav += (a - am) * (v - vm);
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  if (!(saa > 0.0)) throw DataError("drift line needs >= 2 distinct separations");
  DriftLine line;
  line.slope = sav / saa;
  line.intercept = vm - line.slope * am;
  double rss = 0.0;
  for (const auto& [a, v] : series) {
    const double d = v - line.intercept - line.slope * a;
    rss += d * d;
  }
  line.scatter = std::sqrt(rss / static_cast<double>(n));
  line.range = hi - lo;
  if (n > 2) {
    const double s2 = rss / static_cast<double>(n - 2);
    line.slope_sigma = std::sqrt(s2 / saa);
    line.intercept_sigma = std::sqrt(s2 * (1.0 / static_cast<double>(n) + am * am / saa));
  }
  line.flat = std::abs(line.slope) * line.range <= std::max(line.scatter, 1e-15);
  return line;
}

// ---------------------------------------------------------------------------
// Calibration

struct CalibrationOptions {
  double drift_rate = 0.0;  // rad/s per sample, subtracted before fitting
  int max_iterations = 100;
  ElectrostaticSettings electrostatics;
};

struct SeparationFit {
  double z_piezo = 0.0;
  double separation = 0.0;  // z_piezo + z0
  ParabolaFit parabola;
};

struct CurveIssue {
  std::size_t index = 0;
  std::string reason;
};

struct CalibrationResult {
  double v0 = 0.0;
  double v0_sigma = 0.0;
  double z0 = 0.0;
  double z0_sigma = 0.0;
  double c_factor = 0.0;
  double c_factor_sigma = 0.0;
  double sphere_radius = 0.0;
  DriftLine drift;
  std::vector<SeparationFit> per_separation;
  std::vector<CurveIssue> rejected;
  int iterations = 0;
  double curvature_rms = 0.0;  // rms residual of the (z0, C) fit

  void validate() const {
    if (!(c_factor > 0.0)) throw DataError("calibration factor C must be > 0");
    if (!(z0 > 0.0)) throw DataError("z0 must be > 0");
  }
};

namespace detail {

inline double drift_offset(double rate, std::size_t i, std::size_t n) {
  return rate * static_cast<double>(n - 1 - i);
}

/// Chebyshev interpolant of g(a) = a^2 X'(a) on [lo, hi], with the
/// derivative series, used inside the (z0, C) fit.
class GradientInterpolant {
 public:
  GradientInterpolant(double lo, double hi, double radius, const ElectrostaticSettings& es)
      : lo_(lo), hi_(hi) {
    constexpr int n = kNodes;
    std::array<double, n> f{};
    for (int k = 0; k < n; ++k) {
      const double x = std::cos(kPi * (k + 0.5) / n);
      const double a = 0.5 * (hi + lo) + 0.5 * (hi - lo) * x;
      f[k] = a * a * electrostatic_gradient_coefficient(a, radius, es);
    }
    for (int j = 0; j < n; ++j) {
      double sum = 0.0;
      for (int k = 0; k < n; ++k) sum += f[k] * std::cos(kPi * j * (k + 0.5) / n);
      c_[j] = 2.0 * sum / n;
    }
    c_[0] *= 0.5;
    // Derivative coefficients with respect to a.
    dc_[n - 1] = 0.0;
    dc_[n - 2] = 2.0 * (n - 1) * c_[n - 1];
    for (int j = n - 3; j >= 0; --j) dc_[j] = dc_[j + 2] + 2.0 * (j + 1) * c_[j + 1];
    dc_[0] *= 0.5;
    for (auto& d : dc_) d *= 2.0 / (hi - lo);
  }

  bool covers(double a) const { return a >= lo_ && a <= hi_; }

  /// X'(a) and X''(a).
  std::pair<double, double> operator()(double a) const {
    const double g = clenshaw(c_, a);
    const double dg = clenshaw(dc_, a);
    return {g / (a * a), dg / (a * a) - 2.0 * g / (a * a * a)};
  }

 private:
  static constexpr int kNodes = 32;

  double clenshaw(const std::array<double, kNodes>& c, double a) const {
    const double x = (2.0 * a - hi_ - lo_) / (hi_ - lo_);
    double b1 = 0.0;
    double b2 = 0.0;
    for (int j = kNodes - 1; j >= 1; --j) {
      const double b0 = 2.0 * x * b1 - b2 + c[j];
      b2 = b1;
      b1 = b0;
    }
    return x * b1 - b2 + c[0];
  }

  double lo_;
  double hi_;
  std::array<double, kNodes> c_{};
  std::array<double, kNodes> dc_{};
};

/// Fits curvature(z) = -C X'(z + z0) by Gauss-Newton from a
/// proximity-limit starting point.
inline void fit_distance_and_factor(const std::vector<double>& z, const std::vector<double>& curv,
                                    double radius, const CalibrationOptions& opt,
                                    CalibrationResult& out) {
  const std::size_t n = z.size();
  // Proximity limit: 1/sqrt(-c2) = (z + z0) / sqrt(C pi eps0 R), a line in z.
  std::vector<std::pair<double, double>> lin;
  for (std::size_t i = 0; i < n; ++i) {
    if (curv[i] < 0.0) lin.emplace_back(z[i], 1.0 / std::sqrt(-curv[i]));
  }
  if (lin.size() < 2) throw DataError("curvatures do not have the sign of an attractive force");
  const auto start = drift_line_fit(lin);
  if (!(start.slope > 0.0)) throw DataError("curvature series does not decay with separation");
  double c = 1.0 / (start.slope * start.slope * kPi * kVacuumPermittivity * radius);
  double z0 = start.intercept / start.slope;
  if (!(z0 > -z.front())) z0 = -z.front() + 1e-9;

  std::optional<GradientInterpolant> xp;
  auto ensure_range = [&]() {
    const double lo = z.front() + z0;
    const double hi = z.back() + z0;
    if (xp && xp->covers(lo) && xp->covers(hi)) return;
    const double pad = 0.1 * (hi - lo) + 0.05 * lo;
    const double a_lo = std::max(lo - pad, 0.5 * lo);
    const double a_hi = std::min(hi + pad, 0.5 * (hi + radius));
    xp.emplace(a_lo, a_hi, radius, opt.electrostatics);
  };

  Eigen::MatrixXd jac(n, 2);
  Eigen::VectorXd res(n);
  auto linearize = [&]() {
    ensure_range();
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto [x1, x2] = (*xp)(z[i] + z0);
      const auto row = static_cast<Eigen::Index>(i);
      res(row) = curv[i] + c * x1;
      jac(row, 0) = -c * x2;  // d model / d z0
      jac(row, 1) = -x1;      // d model / d C
      rss += res(row) * res(row);
    }
    return rss;
  };

  double prev = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    linearize();
    // Scale both columns to O(1) for conditioning.
    Eigen::MatrixXd js = jac;
    js.col(0) *= z0;
    js.col(1) *= c;
    const Eigen::Vector2d step = js.colPivHouseholderQr().solve(res);
    z0 += step(0) * z0;
    c += step(1) * c;
    if (!(z0 + z.front() > 0.0)) throw DataError("distance fit left the physical region (a <= 0)");
    const double size = std::max(std::abs(step(0)), std::abs(step(1)));
    if (size < 1e-15 || (size < 1e-11 && size >= prev)) break;
    prev = size;
  }
  if (it == opt.max_iterations) {
    throw ConvergenceError("Gauss-Newton fit of (z0, C) did not converge");
  }
  const double rss = linearize();
  out.z0 = z0;
  out.c_factor = c;
  out.iterations = it + 1;
  out.curvature_rms = std::sqrt(rss / static_cast<double>(n));
  if (n > 2) {
    const Eigen::Matrix2d cov = (jac.transpose() * jac).inverse() * (rss / static_cast<double>(n - 2));
    out.z0_sigma = std::sqrt(std::max(cov(0, 0), 0.0));
    out.c_factor_sigma = std::sqrt(std::max(cov(1, 1), 0.0));
  }
}

}  // namespace detail

/// Two-stage calibration: per-piezo-position parabola fits, then a global fit
/// of (z0, C) to the curvature series. Curves that fail validation or do not
/// share the reference grid are listed in `rejected` and skipped.
inline CalibrationResult calibrate(const ShiftDataset& data, const CalibrationOptions& opt = {}) {
  if (!(data.sphere_radius > 0.0)) throw ConfigError("sphere radius must be > 0");
  CalibrationResult out;
  out.sphere_radius = data.sphere_radius;
  std::vector<std::size_t> used;
  const std::vector<double>* grid = nullptr;
  for (std::size_t i = 0; i < data.curves.size(); ++i) {
    const auto& curve = data.curves[i];
    if (auto why = curve.problem(); !why.empty()) {
      out.rejected.push_back({i, why});
      continue;
    }
    if (grid == nullptr) {
      grid = &curve.z_piezo;
    } else if (curve.z_piezo != *grid) {
      out.rejected.push_back({i, fmt::format("z_piezo grid differs from curve {}", used.front())});
      continue;
    }
    used.push_back(i);
  }
  if (grid == nullptr) throw DataError("dataset has no valid curves");

  const std::size_t m = grid->size();
  std::vector<double> curv(m);
  out.per_separation.resize(m);
  std::vector<VoltagePoint> pts(used.size());
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < used.size(); ++k) {
      const auto& curve = data.curves[used[k]];
      pts[k] = {curve.applied_voltage,
                curve.delta_omega[j] - detail::drift_offset(opt.drift_rate, j, m)};
    }
    try {
      out.per_separation[j].parabola = fit_parabola(pts);
    } catch (const DataError& e) {
      throw DataError(fmt::format("parabola fit failed at z_piezo = {} m: {}", (*grid)[j], e.what()));
    }
    out.per_separation[j].z_piezo = (*grid)[j];
    curv[j] = out.per_separation[j].parabola.curvature;
  }
  if (m < 2) throw DataError("calibration needs >= 2 piezo positions");

  detail::fit_distance_and_factor(*grid, curv, data.sphere_radius, opt, out);

  std::vector<std::pair<double, double>> series;
  double sum = 0.0;
  for (auto& s : out.per_separation) {
    s.separation = s.z_piezo + out.z0;
    series.emplace_back(s.separation, s.parabola.v0);
    sum += s.parabola.v0;
  }
  out.v0 = sum / static_cast<double>(m);
  double ss = 0.0;
  for (const auto& s : out.per_separation) ss += (s.parabola.v0 - out.v0) * (s.parabola.v0 - out.v0);
  out.v0_sigma = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m)) : 0.0;
  out.drift = drift_line_fit(series);
  return out;
}

/// F' = -delta_omega / C - (V - V0)^2 dX/da.
inline double gradient_from_shift(double delta_omega, double v_applied, const CalibrationResult& calib,
                                  double a, double radius, const ElectrostaticSettings& s = {}) {
  calib.validate();
  return -delta_omega / calib.c_factor - electrostatic_gradient(a, radius, v_applied - calib.v0, s);
}

struct MeasuredGradient {
  double separation = 0.0;    // m
  double gradient = 0.0;      // N/m, mean over channels
  double random_error = 0.0;  // N/m, 67% confidence
  double total_error = 0.0;   // random and systematic in quadrature
  std::size_t channels = 0;
};

/// Mean Casimir gradient over all voltage channels at each piezo position.
inline std::vector<MeasuredGradient> casimir_gradients(const ShiftDataset& data,
                                                       const CalibrationResult& calib,
                                                       double systematic = 0.0,
                                                       const CalibrationOptions& opt = {}) {
  calib.validate();
  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < data.curves.size(); ++i) {
    const bool rejected = std::any_of(calib.rejected.begin(), calib.rejected.end(),
                                      [&](const CurveIssue& c) { return c.index == i; });
    if (!rejected) used.push_back(i);
  }
  if (used.empty()) throw DataError("no usable curves");
  const auto& grid = data.curves[used.front()].z_piezo;
  const std::size_t m = grid.size();
  const std::size_t n = used.size();
  double t_factor = 1.0;
  if (n > 1) {
    const boost::math::students_t dist(static_cast<double>(n - 1));
    t_factor = boost::math::quantile(boost::math::complement(dist, (1.0 - 0.67) / 2.0));
  }
  std::vector<MeasuredGradient> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double a = grid[j] + calib.z0;
    const double xp = electrostatic_gradient_coefficient(a, data.sphere_radius, opt.electrostatics);
    std::vector<double> values(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& c = data.curves[used[k]];
      const double dw = c.delta_omega[j] - detail::drift_offset(opt.drift_rate, j, m);
      const double dv = c.applied_voltage - calib.v0;
      values[k] = -dw / calib.c_factor - dv * dv * xp;
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    auto& g = out[j];
    g.separation = a;
    g.gradient = mean;
    g.channels = n;
    if (n > 1) g.random_error = t_factor * std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    g.total_error = std::hypot(g.random_error, systematic);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthesis

/// Ten voltages evenly spaced over [0.083, 0.183] V plus eleven at V0.
inline std::vector<double> standard_voltage_plan(double v0) {
  std::vector<double> v;
  for (int i = 0; i < 10; ++i) v.push_back(0.083 + 0.1 * i / 9.0);
  for (int i = 0; i < 11; ++i) v.push_back(v0);
  return v;
}

/// Piezo positions giving separations a_start..a_stop in steps of `step`.
inline std::vector<double> piezo_grid(double z0, double a_start, double a_stop, double step) {
  if (!(step > 0.0) || !(a_stop >= a_start)) throw ConfigError("piezo grid needs step > 0 and stop >= start");
  const auto count = static_cast<std::size_t>(std::floor((a_stop - a_start) / step + 1e-9)) + 1;
  std::vector<double> z(count);
  for (std::size_t i = 0; i < count; ++i) z[i] = a_start + step * static_cast<double>(i) - z0;
  return z;
}

/// delta_omega = -C [F'(z + z0) + (V - V0)^2 X'(z + z0)] + drift + noise.
/// Noise draws follow curve order, then sample order.
inline ShiftDataset synthesize_dataset(const CalibrationTruth& truth,
                                       const std::function<double(double)>& casimir_gradient,
                                       const std::vector<double>& voltages, const NoiseSpec& noise,
                                       const std::vector<double>& grid, double radius,
                                       const ElectrostaticSettings& es = {}) {
  if (grid.size() < 2) throw ConfigError("synthesis needs >= 2 piezo positions");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ConfigError("piezo grid must be strictly increasing");
  }
  if (!(noise.sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  ShiftDataset data;
  data.sphere_radius = radius;
  data.truth = truth;
  data.noise = noise;
  const std::size_t m = grid.size();
  std::vector<double> xp(m);
  std::vector<double> fp(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double a = grid[j] + truth.z0;
    xp[j] = electrostatic_gradient_coefficient(a, radius, es);
    fp[j] = casimir_gradient(a);
  }
  boost::random::mt19937_64 rng(noise.seed);
  boost::random::normal_distribution<double> gauss(0.0, 1.0);
  for (double v : voltages) {
    ShiftCurve c;
    c.applied_voltage = v;
    c.z_piezo = grid;
    c.delta_omega.resize(m);
    const double dv = v - truth.v0;
    for (std::size_t j = 0; j < m; ++j) {
      double w = -truth.c_factor * (fp[j] + dv * dv * xp[j]);
      w += detail::drift_offset(noise.drift_rate, j, m);
      if (noise.sigma > 0.0) w += noise.sigma * gauss(rng);
      c.delta_omega[j] = w;
    }
    data.curves.push_back(std::move(c));
  }
  return data;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const ShiftDataset& d) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["sphere_radius_m"] = d.sphere_radius;
  if (d.truth) {
    j["truth"] = {{"v0_V", d.truth->v0}, {"z0_m", d.truth->z0}, {"c_factor_s_per_kg", d.truth->c_factor}};
  }
  j["noise"] = {{"sigma_rad_per_s", d.noise.sigma},
                {"seed", d.noise.seed},
                {"drift_rate_rad_per_s_per_sample", d.noise.drift_rate}};
  j["curves"] = nlohmann::json::array();
  for (const auto& c : d.curves) {
    j["curves"].push_back({{"voltage_V", c.applied_voltage},
                           {"z_piezo_m", c.z_piezo},
                           {"delta_omega_rad_per_s", c.delta_omega}});
  }
  return j;
}

/// Parses a dataset. Structurally broken curves are kept with an empty
/// payload so that calibrate() can report them by index.
inline ShiftDataset dataset_from_json(const nlohmann::json& j) {
  try {
    ShiftDataset d;
    d.sphere_radius = j.at("sphere_radius_m").get<double>();
    if (j.contains("truth")) {
      const auto& t = j.at("truth");
      d.truth = CalibrationTruth{t.at("v0_V").get<double>(), t.at("z0_m").get<double>(),
                                 t.at("c_factor_s_per_kg").get<double>()};
    }
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      d.noise.sigma = n.value("sigma_rad_per_s", 0.0);
      d.noise.seed = n.value("seed", std::uint64_t{0});
      d.noise.drift_rate = n.value("drift_rate_rad_per_s_per_sample", 0.0);
    }
    for (const auto& c : j.at("curves")) {
      ShiftCurve curve;
      try {
        curve.applied_voltage = c.at("voltage_V").get<double>();
        curve.z_piezo = c.at("z_piezo_m").get<std::vector<double>>();
        curve.delta_omega = c.at("delta_omega_rad_per_s").get<std::vector<double>>();
      } catch (const nlohmann::json::exception&) {
        curve = ShiftCurve{std::numeric_limits<double>::quiet_NaN(), {}, {}};
      }
      d.curves.push_back(std::move(curve));
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("malformed dataset: {}", e.what()));
  }
}

inline nlohmann::json to_json(const CalibrationResult& r) {
  nlohmann::json j;
  j["v0_V"] = r.v0;
  j["v0_sigma_V"] = r.v0_sigma;
  j["z0_m"] = r.z0;
  j["z0_sigma_m"] = r.z0_sigma;
  j["c_factor_s_per_kg"] = r.c_factor;
  j["c_factor_sigma_s_per_kg"] = r.c_factor_sigma;
  j["sphere_radius_m"] = r.sphere_radius;
  j["gauss_newton_iterations"] = r.iterations;
  j["curvature_rms"] = r.curvature_rms;
  j["drift"] = {{"intercept_V", r.drift.intercept},
                {"slope_V_per_m", r.drift.slope},
                {"intercept_sigma_V", r.drift.intercept_sigma},
                {"slope_sigma_V_per_m", r.drift.slope_sigma},
                {"scatter_V", r.drift.scatter},
                {"range_m", r.drift.range},
                {"flat", r.drift.flat}};
  j["rejected_curves"] = nlohmann::json::array();
  for (const auto& c : r.rejected) j["rejected_curves"].push_back({{"index", c.index}, {"reason", c.reason}});
  return j;
}

/// k = omega0 / (2 C).
inline double spring_constant(double omega0, double c_factor) {
  if (!(c_factor > 0.0)) throw ConfigError("C must be > 0");
  return omega0 / (2.0 * c_factor);
}

}  // namespace casimir
