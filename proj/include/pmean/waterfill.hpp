// Copyright 2026 The pmean-arena Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Exact continuous greedy inside one constant-value item.
//
// An agent's priority is values[a] * rate(U_a) with rate strictly decreasing in
// U. Feeding the item at every instant to the current argmax lowers the
// leaders' priorities together, so the end state is a water level: every agent
// that received something sits exactly at the level and every other agent
// started at or below it. The level is found by growing the active set in
// decreasing order of initial priority.

#ifndef PMEAN_WATERFILL_HPP
#define PMEAN_WATERFILL_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/special_functions/lambert_w.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "pmean/welfare.hpp"

namespace pmean {

/// Per-unit-value priority law.
///   rate(U)            priority of one unit of value at utility U (decreasing)
///   utility_at(r)      the U with rate(U) == r
///   integral(U0, U1)   integral of rate over [U0, U1]; summed over agents it is
///                      the time integral of the level, i.e. the item's dual price.
template <class R>
concept PriorityRate = requires(const R& r, double x) {
  { r.rate(x) } -> std::convertible_to<double>;
  { r.utility_at(x) } -> std::convertible_to<double>;
  { r.integral(x, x) } -> std::convertible_to<double>;
};

/// Rates that can solve for the level of a fixed active set in closed form.
template <class R>
concept ClosedFormLevel = PriorityRate<R> && requires(const R& r, std::span<const double> s, double x) {
  { r.level(s, s, x) } -> std::convertible_to<double>;
};

/// Nash log-welfare gradient: rate(U) = 1/U.
struct NashRate {
  double rate(double u) const { return u > 0.0 ? 1.0 / u : std::numeric_limits<double>::infinity(); }
  double utility_at(double r) const { return 1.0 / r; }
  double integral(double u0, double u1) const { return std::log(u1 / u0); }
  // sum_a (1/level - u_a/v_a) = supply
  double level(std::span<const double> v, std::span<const double> u, double supply) const {
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += u[k] / v[k];
    return static_cast<double>(v.size()) / (supply + s);
  }
};

/// rate(U) = (U/p)^(p-1): the dual price of the greedy primal-dual rule with gamma = U/p.
struct PowerRate {
  double p;
  double rate(double u) const {
    if (u <= 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(u / p, p - 1.0);
  }
  double utility_at(double r) const { return p * std::pow(r, 1.0 / (p - 1.0)); }
  double integral(double u0, double u1) const { return std::pow(p, -p) * (std::pow(u1, p) - std::pow(u0, p)); }
  double level(std::span<const double> v, std::span<const double> u, double supply) const {
    const double q = 1.0 / (p - 1.0);
    double su = 0.0, sv = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      su += u[k] / v[k];
      sv += std::pow(v[k], -q - 1.0);
    }
    return std::pow((supply + su) / (p * sv), p - 1.0);
  }
};

/// gamma(U) = U (1 + log(1 + 1/n) - log U), increasing on (0, 1 + 1/n].
inline double regularized_gamma(double u, std::size_t n) {
  if (u <= 0.0) return 0.0;
  return u * (1.0 + std::log1p(1.0 / static_cast<double>(n)) - std::log(u));
}

/// rate(U) = gamma(U)^(p-1) for the regularized primal-dual rule.
struct RegularizedRate {
  double p;
  std::size_t n;

  double cap() const { return 1.0 + 1.0 / static_cast<double>(n); }
  double rate(double u) const {
    const double g = regularized_gamma(u, n);
    if (g <= 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(g, p - 1.0);
  }
  double utility_at(double r) const {
    // gamma is increasing up to its maximum cap() at U = 1 + 1/n; below it
    // U = e^(c - z) with z = -W_{-1}(-y e^-c), c = 1 + log(1 + 1/n).
    const double y = std::pow(r, 1.0 / (p - 1.0));
    if (!(y < cap())) return cap();
    if (y <= 0.0) return 0.0;
    const double c = 1.0 + std::log1p(1.0 / static_cast<double>(n));
    const double z = -boost::math::lambert_wm1(-y * std::exp(-c));
    return std::min(cap(), std::exp(c - z));
  }
  double integral(double u0, double u1) const {
    if (u1 <= u0) return 0.0;
    const double w = u1 - u0;
    return w * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                   [&](double s) { return rate(u0 + s * w); }, 0.0, 1.0, 15, 1e-13);
  }
};

struct WaterfillResult {
  std::vector<double> fractions;
  double level = 0.0;   // final common priority of the active agents
  double alpha = 0.0;   // time integral of the level over the item
};

namespace detail {

template <PriorityRate R>
double solve_level(const R& rate, std::span<const double> v, std::span<const double> u, double supply, double lo,
                   double hi) {
  if constexpr (ClosedFormLevel<R>) {
    (void)lo;
    (void)hi;
    return rate.level(v, u, supply);
  } else {
    // time(level) = sum_a (utility_at(level / v_a) - u_a) / v_a, decreasing in level.
    auto time_at = [&](double log_level) {
      const double lvl = std::exp(log_level);
      double t = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) t += (rate.utility_at(lvl / v[k]) - u[k]) / v[k];
      return t - supply;
    };
    double a = lo > 0.0 ? std::log(lo) : -700.0;
    double b = std::isfinite(hi) ? std::log(hi) : 700.0;
    double fa = time_at(a), fb = time_at(b);
    if (fa <= 0.0) return lo;
    if (fb >= 0.0) return hi;
    std::uintmax_t iters = 300;
    auto [x0, x1] =
        boost::math::tools::toms748_solve(time_at, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(50), iters);
    return std::exp(0.5 * (x0 + x1));
  }
}

}  // namespace detail

/// Continuous greedy of `supply` units of item time under the given rate.
/// Agents with zero value never participate; an all-zero item is discarded.
template <PriorityRate R>
WaterfillResult waterfill(std::span<const double> u, std::span<const double> values, const R& rate,
                          double supply = 1.0) {
  const std::size_t n = u.size();
  WaterfillResult out;
  out.fractions.assign(n, 0.0);
  std::vector<std::size_t> cand;
  std::vector<double> prio(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    if (values[a] > 0.0) {
      cand.push_back(a);
      prio[a] = values[a] * rate.rate(u[a]);
    }
  }
  if (cand.empty() || supply <= 0.0) return out;
  std::stable_sort(cand.begin(), cand.end(), [&](std::size_t x, std::size_t y) { return prio[x] > prio[y]; });

  std::vector<double> av, au;
  double level = 0.0;
  std::size_t k = 0;
  while (k < cand.size()) {
    av.push_back(values[cand[k]]);
    au.push_back(u[cand[k]]);
    const double top = prio[cand[k]];
    ++k;
    const double next = k < cand.size() ? prio[cand[k]] : 0.0;
    level = detail::solve_level(rate, av, au, supply, next, top);
    if (level > next) break;
  }
  double total = 0.0;
  for (std::size_t j = 0; j < av.size(); ++j) {
    const std::size_t a = cand[j];
    const double uf = rate.utility_at(level / values[a]);
    out.fractions[a] = std::max(0.0, (uf - u[a]) / values[a]);
    total += out.fractions[a];
  }
  if (total > supply) {
    for (double& f : out.fractions) f *= supply / total;
  }
  for (std::size_t j = 0; j < av.size(); ++j) {
    const std::size_t a = cand[j];
    out.alpha += rate.integral(u[a], u[a] + values[a] * out.fractions[a]);
  }
  out.level = level;
  return out;
}

/// Max-min leveling: raise the lowest floors first. floor[a] rises by
/// values[a] per unit of item time given to a. Zero-value agents are skipped.
inline WaterfillResult level_fill(std::span<const double> floor, std::span<const double> values, double supply = 1.0) {
  const std::size_t n = floor.size();
  WaterfillResult out;
  out.fractions.assign(n, 0.0);
  std::vector<std::size_t> cand;
  for (std::size_t a = 0; a < n; ++a)
    if (values[a] > 0.0) cand.push_back(a);
  if (cand.empty() || supply <= 0.0) return out;
  std::stable_sort(cand.begin(), cand.end(), [&](std::size_t x, std::size_t y) { return floor[x] < floor[y]; });

  double inv = 0.0, weighted = 0.0, level = 0.0;
  std::size_t k = 0;
  while (k < cand.size()) {
    const std::size_t a = cand[k++];
    inv += 1.0 / values[a];
    weighted += floor[a] / values[a];
    level = (supply + weighted) / inv;
    if (k == cand.size() || level <= floor[cand[k]]) break;
  }
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t a = cand[j];
    out.fractions[a] = std::max(0.0, (level - floor[a]) / values[a]);
    total += out.fractions[a];
  }
  if (total > supply)
    for (double& f : out.fractions) f *= supply / total;
  out.level = level;
  return out;
}

}  // namespace pmean

#endif  // PMEAN_WATERFILL_HPP
