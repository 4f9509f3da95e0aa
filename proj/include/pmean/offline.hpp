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

// Offline optimum of the p-mean welfare over fractional allocations.
//
// solve_opt runs conditional gradient (Frank-Wolfe) on W itself, which is
// concave on the product of item simplices for every p <= 1. The linear
// oracle sends each item to the agent maximizing values * dW/dU and the
// Frank-Wolfe gap bounds OPT - W from above.

#ifndef PMEAN_OFFLINE_HPP
#define PMEAN_OFFLINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "pmean/welfare.hpp"

namespace pmean {

struct SolveResult {
  Allocation allocation;
  double opt_value = 0.0;
  double certified_gap = 0.0;  // OPT - opt_value is at most this
  std::size_t iterations = 0;
  std::vector<double> trajectory;  // objective after each iteration

  double upper() const { return opt_value + certified_gap; }
};

/// Exponent used in place of p = -inf.
inline constexpr double kEgalitarianSurrogate = -64.0;

namespace detail {

/// dW/dU_a = (1/n) (U_a / W)^(p-1); nash is the p = 0 case.
inline std::vector<double> welfare_gradient(std::span<const double> u, double p) {
  const PMeanParam param = PMeanParam::finite(p);
  const double w = p_mean_welfare(u, param);
  const double lw = std::log(w), inv_n = 1.0 / static_cast<double>(u.size());
  std::vector<double> g(u.size());
  const double e = param.is_nash() ? 0.0 : p;
  for (std::size_t a = 0; a < u.size(); ++a)
    g[a] = u[a] > 0.0 ? inv_n * std::exp((e - 1.0) * (std::log(u[a]) - lw)) : std::numeric_limits<double>::infinity();
  return g;
}

}  // namespace detail

/// Maximizes the p-mean welfare. Returns the best feasible allocation found
/// together with a certified bound on its distance to the optimum.
inline SolveResult solve_opt(const Instance& inst, const PMeanParam& p, double tol = 1e-6,
                             std::size_t max_iters = 5000) {
  const std::size_t n = inst.agents(), m = inst.size();
  SolveResult res;
  res.allocation = Allocation(n, m);

  // Sparse supports: for item i, the agents with positive value.
  std::vector<std::vector<std::uint32_t>> supp(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t a = 0; a < n; ++a)
      if (inst.item(i).values[a] > 0.0) supp[i].push_back(static_cast<std::uint32_t>(a));

  std::vector<double> total(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (auto a : supp[i]) total[a] += inst.item(i).values[a];
  if (!p.positive() && std::any_of(total.begin(), total.end(), [](double t) { return t <= 0.0; })) return res;

  const double e = p.is_neg_infinity() ? kEgalitarianSurrogate : p.value();
  const PMeanParam work = PMeanParam::finite(e);

  // Start from the uniform split of each item over its support.
  std::vector<std::vector<double>> x(m);
  for (std::size_t i = 0; i < m; ++i) x[i].assign(supp[i].size(), supp[i].empty() ? 0.0 : 1.0 / supp[i].size());
  auto recompute = [&]() {
    std::vector<double> u(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < supp[i].size(); ++k) u[supp[i][k]] += inst.item(i).values[supp[i][k]] * x[i][k];
    return u;
  };
  std::vector<double> u = recompute();
  if (e == 1.0) {
    // Linear objective: every item to a max-value agent is optimal.
    for (std::size_t i = 0; i < m; ++i) {
      if (supp[i].empty()) continue;
      std::size_t best = 0;
      for (std::size_t k = 1; k < supp[i].size(); ++k)
        if (inst.item(i).values[supp[i][k]] > inst.item(i).values[supp[i][best]]) best = k;
      std::fill(x[i].begin(), x[i].end(), 0.0);
      x[i][best] = 1.0;
    }
    u = recompute();
    max_iters = 0;
  }

  std::vector<double> us(n), dir(n), ut(n);
  std::vector<std::size_t> pick(m);
  double w = p_mean_welfare(u, work);
  double gap = 0.0;
  std::size_t it = 0;
  for (; it < max_iters; ++it) {
    const auto g = detail::welfare_gradient(u, e);
    std::fill(us.begin(), us.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      if (supp[i].empty()) continue;
      std::size_t best = 0;
      double bv = -1.0;
      for (std::size_t k = 0; k < supp[i].size(); ++k) {
        const double s = inst.item(i).values[supp[i][k]] * g[supp[i][k]];
        if (s > bv) {
          bv = s;
          best = k;
        }
      }
      pick[i] = best;
      us[supp[i][best]] += inst.item(i).values[supp[i][best]];
    }
    gap = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      dir[a] = us[a] - u[a];
      if (dir[a] != 0.0) gap += g[a] * dir[a];
    }
    if (gap <= tol * std::max(1.0, w)) break;

    // Exact line search on the concave phi(s) = W(u + s dir).
    auto slope = [&](double s) {
      for (std::size_t a = 0; a < n; ++a) ut[a] = u[a] + s * dir[a];
      for (std::size_t a = 0; a < n; ++a)
        if (!(ut[a] > 0.0) && dir[a] != 0.0) return -std::numeric_limits<double>::infinity();
      const auto gs = detail::welfare_gradient(ut, e);
      double d = 0.0;
      for (std::size_t a = 0; a < n; ++a)
        if (dir[a] != 0.0) d += gs[a] * dir[a];
      return d;
    };
    double step = 1.0;
    const double s1 = slope(1.0);
    if (!(s1 >= 0.0)) {
      std::uintmax_t iters = 100;
      auto [lo, hi] = boost::math::tools::toms748_solve(
          [&](double s) {
            const double d = slope(s);
            return std::isinf(d) ? -std::numeric_limits<double>::max() : d;
          },
          0.0, 1.0, gap, std::isinf(s1) ? -std::numeric_limits<double>::max() : s1,
          boost::math::tools::eps_tolerance<double>(40), iters);
      step = lo;
      (void)hi;
    }
    if (step <= 0.0) break;
    for (std::size_t i = 0; i < m; ++i) {
      if (supp[i].empty()) continue;
      for (double& f : x[i]) f *= 1.0 - step;
      x[i][pick[i]] += step;
    }
    for (std::size_t a = 0; a < n; ++a) u[a] += step * dir[a];
    if ((it & 63) == 63) u = recompute();
    const double wn = p_mean_welfare(u, work);
    w = std::max(w, wn);
    res.trajectory.push_back(wn);
  }
  u = recompute();
  w = p_mean_welfare(u, work);
  if (max_iters > 0 && it == max_iters) {
    const auto g = detail::welfare_gradient(u, e);
    gap = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double bv = 0.0;
      for (auto a : supp[i]) bv = std::max(bv, inst.item(i).values[a] * g[a]);
      gap += bv;
    }
    for (std::size_t a = 0; a < n; ++a)
      if (u[a] > 0.0) gap -= g[a] * u[a];
  }
  gap = std::max(gap, 0.0);

  for (std::size_t i = 0; i < m; ++i) {
    std::vector<Allocation::Share> col;
    for (std::size_t k = 0; k < supp[i].size(); ++k)
      if (x[i][k] > 0.0) col.push_back({supp[i][k], x[i][k]});
    res.allocation.assign_column(i, std::move(col));
  }
  res.iterations = it;
  if (p.is_neg_infinity()) {
    // min u <= OPT_egal <= OPT_surrogate <= W_surrogate + gap.
    res.opt_value = *std::min_element(u.begin(), u.end());
    res.certified_gap = w + gap - res.opt_value;
  } else {
    res.opt_value = w;
    res.certified_gap = gap;
  }
  return res;
}

inline UtilityVector opt_utilities(const SolveResult& r, const Instance& inst) {
  return utilities_of(inst, r.allocation);
}

/// Grid optimum for tiny instances (n <= 3, m <= 3): every item is split in
/// multiples of grid_step. The first m-1 items are enumerated exhaustively;
/// the last one is placed unit by unit with a greedy that is exact for
/// separable concave objectives (and for max-min).
inline double brute_force_opt(const Instance& inst, const PMeanParam& p, double grid_step) {
  const std::size_t n = inst.agents(), m = inst.size();
  if (n > 3 || m > 3) throw InvalidInput("brute_force_opt is limited to n <= 3 and m <= 3");
  const double units_d = 1.0 / grid_step;
  const long units = std::lround(units_d);
  if (!(grid_step > 0.0) || std::fabs(units_d - static_cast<double>(units)) > 1e-9)
    throw InvalidInput("grid_step must divide 1");
  if (m == 0) return p_mean_welfare(std::vector<double>(n, 0.0), p);

  std::vector<std::vector<long>> comps;
  std::vector<long> cur(n, 0);
  auto gen = [&](auto&& self, std::size_t a, long left) -> void {
    if (a + 1 == n) {
      cur[a] = left;
      comps.push_back(cur);
      return;
    }
    for (long k = 0; k <= left; ++k) {
      cur[a] = k;
      self(self, a + 1, left - k);
    }
  };
  gen(gen, 0, units);

  // Objective with the same argmax as W on the grid.
  auto f = [&](double x) {
    if (p.is_nash()) return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity();
    if (p.is_neg_infinity()) return x;
    const double e = p.value();
    if (x <= 0.0) return e > 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (e == 1.0) return x;
    if (e == 0.5) return 2.0 * std::sqrt(x);
    if (e == -1.0) return -1.0 / x;
    if (e == -2.0) return -0.5 / (x * x);
    return std::pow(x, e) / e;
  };
  const auto& last = inst.item(m - 1).values;
  auto score = [&](const std::vector<double>& x) {
    if (p.is_neg_infinity()) return *std::min_element(x.begin(), x.end());
    double s = 0.0;
    for (double v : x) s += f(v);
    return s;
  };
  std::vector<double> best_u;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<double> u(n), fu(n), fnext(n);
  std::vector<long> idx(m - 1, 0);
  while (true) {
    std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i)
      for (std::size_t a = 0; a < n; ++a)
        u[a] += inst.item(i).values[a] * grid_step * static_cast<double>(comps[idx[i]][a]);
    auto refresh = [&](std::size_t a) {
      if (last[a] <= 0.0 || p.is_neg_infinity()) return;
      fnext[a] = f(u[a] + last[a] * grid_step);
    };
    for (std::size_t a = 0; a < n; ++a) {
      fu[a] = f(u[a]);
      refresh(a);
    }
    for (long k = 0; k < units; ++k) {
      std::size_t pickk = n;
      double best_gain = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < n; ++a) {
        if (last[a] <= 0.0) continue;
        double gain;
        if (p.is_neg_infinity()) gain = -u[a];
        else gain = std::isinf(fu[a]) ? std::numeric_limits<double>::infinity() : fnext[a] - fu[a];
        if (gain > best_gain) {
          best_gain = gain;
          pickk = a;
        }
      }
      if (pickk == n) break;
      u[pickk] += last[pickk] * grid_step;
      fu[pickk] = fnext[pickk];
      refresh(pickk);
    }
    const double sc = score(u);
    if (best_u.empty() || sc > best_score) {
      best_score = sc;
      best_u = u;
    }
    std::size_t j = 0;
    while (j < idx.size() && ++idx[j] == static_cast<long>(comps.size())) idx[j++] = 0;
    if (j == idx.size()) break;
  }
  return p_mean_welfare(best_u, p);
}

}  // namespace pmean

#endif  // PMEAN_OFFLINE_HPP
