#pragma once

// Globally adaptive Gauss-Kronrod (G10/K21) quadrature for vector-valued
// integrands. The polarization-tensor and Lifshitz integrands produce several
// components from one expensive evaluation (shared square roots and Fermi
// factors), so the driver integrates a std::array in a single pass. Node and
// weight tables come from Boost.Math.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "casimir/error.hpp"

namespace casimir::quadrature {

template <std::size_t N>
using Values = std::array<double, N>;

struct Tolerance {
  double relative = 1e-10;
  /// Absolute floor per component; 0 means "relative to the L1 norm only".
  double absolute = 0.0;
  std::size_t max_intervals = 4000;
};

template <std::size_t N>
struct Result {
  Values<N> value{};
  Values<N> error{};
  Values<N> l1{};
  std::size_t evaluations = 0;
  std::size_t intervals = 0;
};

namespace detail {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 21>;
using Gauss = boost::math::quadrature::gauss<double, 10>;

template <std::size_t N>
struct Interval {
  double a;
  double b;
  Values<N> value;
  Values<N> error;
  Values<N> l1;
  double priority;  // largest normalised error component
};

template <std::size_t N>
struct ByPriority {
  bool operator()(const Interval<N>& x, const Interval<N>& y) const {
    return x.priority < y.priority;
  }
};

template <std::size_t N, class F>
Interval<N> apply_rule(F& f, double a, double b) {
  const auto& xk = Kronrod::abscissa();
  const auto& wk = Kronrod::weights();
  const auto& wg = Gauss::weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  std::array<Values<N>, 21> samples;
  std::array<double, 21> w_k{};
  std::array<double, 21> w_g{};
  samples[0] = f(mid);
  w_k[0] = wk[0];
  // K21 has 11 non-negative abscissae; the Gauss nodes sit at odd indices.
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double dx = half * xk[i];
    const double g = (i % 2 == 1) ? wg[i / 2] : 0.0;
    samples[2 * i - 1] = f(mid - dx);
    samples[2 * i] = f(mid + dx);
    w_k[2 * i - 1] = w_k[2 * i] = wk[i];
    w_g[2 * i - 1] = w_g[2 * i] = g;
  }

  Interval<N> out{a, b, {}, {}, {}, 0.0};
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  for (std::size_t c = 0; c < N; ++c) {
    double kron = 0.0;
    double gauss = 0.0;
    double l1 = 0.0;
    for (std::size_t j = 0; j < 21; ++j) {
      kron += w_k[j] * samples[j][c];
      gauss += w_g[j] * samples[j][c];
      l1 += w_k[j] * std::abs(samples[j][c]);
    }
    const double mean = 0.5 * kron;
    double asc = 0.0;
    for (std::size_t j = 0; j < 21; ++j) asc += w_k[j] * std::abs(samples[j][c] - mean);
    asc *= std::abs(half);
    // QUADPACK error scaling.
    double err = std::abs(half * (kron - gauss));
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    out.value[c] = half * kron;
    out.l1[c] = std::abs(half) * l1;
    out.error[c] = std::max(err, 50.0 * kEps * out.l1[c]);
  }
  return out;
}

}  // namespace detail

/// Integrates f over the panels [breaks[i], breaks[i+1]]. `f` maps a double
/// to Values<N>. Throws ConvergenceError when the interval budget runs out
/// before every component meets `tol`.
template <std::size_t N, class F>
Result<N> integrate_panels(F&& f, const std::vector<double>& breaks,
                           const Tolerance& tol = {}) {
  using Item = detail::Interval<N>;
  Result<N> result;
  if (breaks.size() < 2) return result;

  std::priority_queue<Item, std::vector<Item>, detail::ByPriority<N>> heap;
  Values<N> total{};
  Values<N> total_err{};
  Values<N> total_l1{};
  Values<N> scale{};

  auto account = [&](const Item& item, double sign) {
    for (std::size_t c = 0; c < N; ++c) {
      total[c] += sign * item.value[c];
      total_err[c] += sign * item.error[c];
      total_l1[c] += sign * item.l1[c];
    }
  };
  auto push = [&](Item item) {
    double worst = 0.0;
    for (std::size_t c = 0; c < N; ++c) worst = std::max(worst, item.error[c] / scale[c]);
    item.priority = worst;
    heap.push(std::move(item));
  };
  auto converged = [&]() {
    for (std::size_t c = 0; c < N; ++c) {
      if (total_err[c] > std::max(tol.absolute, tol.relative * total_l1[c])) return false;
    }
    return true;
  };

  std::vector<Item> initial;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    initial.push_back(detail::apply_rule<N>(f, breaks[i], breaks[i + 1]));
    result.evaluations += 21;
    account(initial.back(), 1.0);
  }
  // Split priorities are normalised by the first-pass L1 norms.
  for (std::size_t c = 0; c < N; ++c) {
    scale[c] = std::max({total_l1[c], tol.absolute, std::numeric_limits<double>::min()});
  }
  for (auto& item : initial) push(std::move(item));

  std::size_t intervals = heap.size();
  while (!heap.empty() && !converged()) {
    if (intervals >= tol.max_intervals) {
      throw ConvergenceError("adaptive quadrature exhausted " +
                             std::to_string(tol.max_intervals) + " intervals on [" +
                             std::to_string(breaks.front()) + ", " +
                             std::to_string(breaks.back()) + "]");
    }
    Item top = heap.top();
    heap.pop();
    const double mid = 0.5 * (top.a + top.b);
    if (!(mid > top.a && mid < top.b)) {
      // Interval at machine resolution: its error cannot shrink further.
      throw ConvergenceError("adaptive quadrature reached machine resolution near x = " +
                             std::to_string(top.a));
    }
    account(top, -1.0);
    Item left = detail::apply_rule<N>(f, top.a, mid);
    Item right = detail::apply_rule<N>(f, mid, top.b);
    result.evaluations += 42;
    ++intervals;
    account(left, 1.0);
    account(right, 1.0);
    push(std::move(left));
    push(std::move(right));
  }
  result.value = total;
  result.error = total_err;
  result.l1 = total_l1;
  result.intervals = intervals;
  return result;
}

template <std::size_t N, class F>
Result<N> integrate(F&& f, double a, double b, const Tolerance& tol = {}) {
  return integrate_panels<N>(std::forward<F>(f), std::vector<double>{a, b}, tol);
}

/// Scalar convenience wrapper.
template <class F>
double integrate_scalar(F&& f, double a, double b, const Tolerance& tol = {},
                        double* error = nullptr) {
  auto r = integrate<1>([&](double x) { return Values<1>{f(x)}; }, a, b, tol);
  if (error != nullptr) *error = r.error[0];
  return r.value[0];
}

}  // namespace casimir::quadrature
