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

// Run-level certificates: checks of the analytic guarantees on concrete
// traces. Every check returns a CertificateReport instead of throwing, so a
// failing bound is data, not an error.

#ifndef PMEAN_CERTIFICATES_HPP
#define PMEAN_CERTIFICATES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmean/allocators.hpp"
#include "pmean/welfare.hpp"

namespace pmean {

struct CertificateReport {
  CertificateReport() = default;
  CertificateReport(std::string name_, bool pass_, double measured_, double bound_, double bound_unclipped_,
                    std::optional<std::size_t> worst_index_, double tolerance_,
                    std::optional<double> beta_ = std::nullopt)
      : name(std::move(name_)), pass(pass_), measured(measured_), bound(bound_), bound_unclipped(bound_unclipped_),
        worst_index(worst_index_), tolerance(tolerance_), beta(beta_) {}

  std::string name;
  bool pass = true;
  double measured = 0.0;
  double bound = 0.0;            // possibly clipped
  double bound_unclipped = 0.0;
  std::optional<std::size_t> worst_index;
  double tolerance = 0.0;
  std::optional<double> beta;
};

struct DualAssignment {
  std::vector<double> alphas;
  std::vector<double> gammas;
  PMeanParam p = PMeanParam::finite(1.0);
};

namespace detail {

inline void require_positive_p(const PMeanParam& p) {
  if (!p.is_finite() || !p.positive()) throw ConfigError("primal-dual certificates need 0 < p <= 1");
}

inline double log_n1(std::size_t n) { return std::log(static_cast<double>(n) + 1.0); }

// |p|/(|p|+1), with the -inf limit 1.
inline double holder_exponent(const PMeanParam& p) {
  if (p.is_neg_infinity()) return 1.0;
  const double m = p.magnitude();
  return m / (m + 1.0);
}

}  // namespace detail

/// P = (1/p) sum u^p.
inline double primal_objective(std::span<const double> u, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("primal objective needs 0 < p <= 1");
  double s = 0.0;
  for (double x : u) s += std::pow(x, p);
  return s / p;
}

/// D = sum alpha + (1/p - 1) sum gamma^p.
inline double dual_objective(const DualAssignment& d) {
  detail::require_positive_p(d.p);
  const double p = d.p.value();
  double s = 0.0;
  for (double a : d.alphas) s += a;
  double g = 0.0;
  for (double x : d.gammas) g += std::pow(x, p);
  return s + (1.0 / p - 1.0) * g;
}

/// alpha_i >= v_ai gamma_a^(p-1) for every item and agent. worst_index is the item.
inline CertificateReport check_dual_feasibility(const Instance& inst, const DualAssignment& d, double tol) {
  detail::require_positive_p(d.p);
  if (d.alphas.size() != inst.size() || d.gammas.size() != inst.agents())
    throw InvalidInput("dual assignment does not match instance dimensions");
  const double p = d.p.value();
  CertificateReport r{"dual_feasibility", true, 0.0, 0.0, 0.0, std::nullopt, tol};
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < inst.size(); ++i) {
    for (std::size_t a = 0; a < inst.agents(); ++a) {
      const double v = inst.item(i).values[a];
      if (v <= 0.0) continue;
      double need;
      if (p == 1.0) need = v;
      else need = d.gammas[a] > 0.0 ? v * std::pow(d.gammas[a], p - 1.0) : std::numeric_limits<double>::infinity();
      const double viol = need - d.alphas[i];
      if (viol > worst) {
        worst = viol;
        r.worst_index = i;
      }
    }
  }
  r.measured = std::max(0.0, worst);
  r.pass = !(worst > tol);
  return r;
}

/// Gamma^p P >= D.
inline CertificateReport check_pd_ratio(double P, double D, double Gamma, double p, double tol) {
  CertificateReport r{"pd_ratio", true, D, std::pow(Gamma, p) * P, std::pow(Gamma, p) * P, std::nullopt, tol};
  r.pass = D <= r.bound + tol;
  return r;
}

/// (1/n) sum_a Ut_a(t) / U_a(t) for every prefix length t = 0..m, where Ut is
/// the reference allocation's zero-base utility over the first t items and U
/// is the traced utility after t items (snapshots plus final state).
inline std::vector<double> fundamental_lemma_profile(const RunTrace& trace, const Instance& inst,
                                                     const Allocation& reference) {
  const std::size_t n = inst.agents(), m = inst.size();
  if (reference.agents() != n || reference.items() != m)
    throw InvalidInput("reference allocation does not match instance");
  if (trace.snapshots.size() != m || trace.final_state.n != n)
    throw InvalidInput("trace does not match instance or lacks snapshots");
  std::vector<double> ref(n, 0.0), out;
  out.reserve(m + 1);
  for (std::size_t t = 0; t <= m; ++t) {
    const auto& u = t < m ? trace.snapshots[t].u : trace.final_state.u;
    double s = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      if (ref[a] > 0.0) s += ref[a] / u[a];
    out.push_back(s / static_cast<double>(n));
    if (t < m)
      for (const auto& sh : reference.column(t)) ref[sh.agent] += inst.item(t).values[sh.agent] * sh.fraction;
  }
  return out;
}

/// Streaming form of fundamental_lemma_profile: observe(t, u) must be called
/// for t = 0, 1, ... with the utilities before item t (t = m: final).
class FundamentalLemmaTracker {
 public:
  FundamentalLemmaTracker(const Instance& inst, const Allocation& reference)
      : inst_(inst), ref_alloc_(reference), ref_(inst.agents(), 0.0) {
    if (reference.agents() != inst.agents() || reference.items() != inst.size())
      throw InvalidInput("reference allocation does not match instance");
  }

  double observe(std::size_t t, std::span<const double> u) {
    if (t != next_) throw InvalidInput("fundamental lemma tracker observed out of order");
    double s = 0.0;
    for (std::size_t a = 0; a < u.size(); ++a)
      if (ref_[a] > 0.0) s += ref_[a] / u[a];
    s /= static_cast<double>(u.size());
    if (t < inst_.size())
      for (const auto& sh : ref_alloc_.column(t)) ref_[sh.agent] += inst_.item(t).values[sh.agent] * sh.fraction;
    if (s > worst_) {
      worst_ = s;
      worst_t_ = t;
    }
    ++next_;
    return s;
  }

  double worst() const { return worst_; }
  std::size_t worst_time() const { return worst_t_; }

 private:
  const Instance& inst_;
  const Allocation& ref_alloc_;
  std::vector<double> ref_;
  std::size_t next_ = 0, worst_t_ = 0;
  double worst_ = 0.0;
};

inline double fundamental_lemma_gap(const RunTrace& trace, const Instance& inst, const Allocation& reference,
                                    std::size_t t) {
  if (t > inst.size()) throw InvalidInput("time index beyond the last item");
  return fundamental_lemma_profile(trace, inst, reference)[t];
}

/// Fraction of agents with u <= beta * opt against (beta log(n+1))^(|p|/(|p|+1)).
inline CertificateReport count_bad_agents(std::span<const double> u, double beta, double opt, const PMeanParam& p) {
  const std::size_t n = u.size();
  const double thr = beta * opt;
  std::size_t bad = 0;
  for (double x : u)
    if (x <= thr) ++bad;
  CertificateReport r{"bad_agents", true, static_cast<double>(bad) / static_cast<double>(n), 0.0, 0.0, std::nullopt,
                      1e-9};
  r.beta = beta;
  r.bound_unclipped = std::pow(beta * detail::log_n1(n), detail::holder_exponent(p));
  r.bound = std::min(1.0, r.bound_unclipped);
  r.pass = r.measured <= r.bound + r.tolerance;
  return r;
}

inline std::size_t critical_count(std::span<const double> u, std::span<const double> remaining, double phi,
                                  double threshold) {
  std::size_t c = 0;
  for (std::size_t a = 0; a < u.size(); ++a)
    if (u[a] + remaining[a] / phi <= threshold) ++c;
  return c;
}

/// Fraction of agents with u + remaining/phi <= beta * opt against
/// max{(2 beta log(n+1))^(|p|/(|p|+1)), (2 phi beta)^|p|}.
inline CertificateReport count_critical_agents(std::span<const double> u, std::span<const double> remaining,
                                               double phi, double beta, double opt, const PMeanParam& p) {
  const std::size_t n = u.size();
  CertificateReport r{"critical_agents", true, 0.0, 0.0, 0.0, std::nullopt, 1e-9};
  r.beta = beta;
  r.measured = static_cast<double>(critical_count(u, remaining, phi, beta * opt)) / static_cast<double>(n);
  const double first = std::pow(2.0 * beta * detail::log_n1(n), detail::holder_exponent(p));
  const double base = 2.0 * phi * beta;
  double second;
  if (p.is_neg_infinity()) second = base < 1.0 ? 0.0 : (base == 1.0 ? 1.0 : std::numeric_limits<double>::infinity());
  else second = std::pow(base, p.magnitude());
  r.bound_unclipped = std::max(first, second);
  r.bound = std::min(1.0, r.bound_unclipped);
  r.pass = r.measured <= r.bound + r.tolerance;
  return r;
}

/// beta* = 1/2 n^(-1/2 - 1/(2|p|)) log(n+1)^(-1/2 + 1/(2|p|)); the -inf limit is 1/(2 phi).
inline double beta_star(std::size_t n, const PMeanParam& p) {
  if (!p.negative()) throw ConfigError("beta* is defined for negative p");
  const double nn = static_cast<double>(n), l = detail::log_n1(n);
  const double inv = p.is_neg_infinity() ? 0.0 : 1.0 / (2.0 * p.magnitude());
  return 0.5 * std::pow(nn, -0.5 - inv) * std::pow(l, -0.5 + inv);
}

/// Number of beta*-critical agents against sqrt(n log(n+1)).
inline CertificateReport beta_star_critical_check(std::span<const double> u, std::span<const double> remaining,
                                                  double phi, double opt, const PMeanParam& p) {
  const std::size_t n = u.size();
  CertificateReport r{"beta_star_critical", true, 0.0, 0.0, 0.0, std::nullopt, 1e-9};
  r.measured = static_cast<double>(critical_count(u, remaining, phi, beta_star(n, p) * opt));
  r.bound = r.bound_unclipped = mixed_phi(n);
  r.pass = r.measured <= r.bound + r.tolerance;
  return r;
}

/// min_a (u_a + remaining_a/phi) >= (beta*/K) opt. At the final time remaining is 0.
inline CertificateReport regularized_floor_check(std::span<const double> u, std::span<const double> remaining,
                                                 double phi, double opt, const PMeanParam& p, double K) {
  const std::size_t n = u.size();
  CertificateReport r{"regularized_floor", true, std::numeric_limits<double>::infinity(), 0.0, 0.0, std::nullopt,
                      1e-9};
  for (std::size_t a = 0; a < n; ++a) {
    const double x = u[a] + (remaining.empty() ? 0.0 : remaining[a] / phi);
    if (x < r.measured) {
      r.measured = x;
      r.worst_index = a;
    }
  }
  r.bound = r.bound_unclipped = beta_star(n, p) / K * opt;
  r.pass = r.measured >= r.bound - r.tolerance;
  return r;
}

/// Final utilities: min_a u_a >= (beta*/K) opt.
inline CertificateReport utility_floor_check(std::span<const double> u, double opt, const PMeanParam& p, double K) {
  auto r = regularized_floor_check(u, {}, 1.0, opt, p, K);
  r.name = "utility_floor";
  return r;
}

/// With S the agents whose final utility is at most `threshold`:
/// (1/n) sum_{a in S} opt_u[a] <= threshold log(n+1).
inline CertificateReport bad_agents_optimal_utility_check(std::span<const double> u, std::span<const double> opt_u,
                                                          double threshold) {
  const std::size_t n = u.size();
  CertificateReport r{"bad_agents_optimal_utility", true, 0.0, 0.0, 0.0, std::nullopt, 1e-9};
  for (std::size_t a = 0; a < n; ++a)
    if (u[a] <= threshold) r.measured += opt_u[a];
  r.measured /= static_cast<double>(n);
  r.bound = r.bound_unclipped = threshold * detail::log_n1(n);
  r.pass = r.measured <= r.bound + r.tolerance;
  return r;
}

/// 2 (K(n+1))^|p| log(n+1): relaxed Nashian Greedy, -1 <= p <= 0.
inline double nashian_ratio_bound(std::size_t n, const PMeanParam& p, double K = 1.0) {
  return 2.0 * std::pow(K * (static_cast<double>(n) + 1.0), p.magnitude()) * detail::log_n1(n);
}

/// ((|p|/(|p|+1))^(1/|p|) (2K)^(-|p|/(|p|+1)))^(-1) sqrt(n log(n+1)): relaxed Mixed Greedy, p <= -1.
inline double mixed_ratio_bound(std::size_t n, const PMeanParam& p, double K = 1.0) {
  double c;
  if (p.is_neg_infinity()) {
    c = 1.0 / (2.0 * K);
  } else {
    const double m = p.magnitude();
    c = std::pow(m / (m + 1.0), 1.0 / m) * std::pow(2.0 * K, -m / (m + 1.0));
  }
  return mixed_phi(n) / c;
}

}  // namespace pmean

#endif  // PMEAN_CERTIFICATES_HPP
