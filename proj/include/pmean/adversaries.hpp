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

// Instance generators: two adaptive hard-instance constructions that choose
// the next items after observing the opponent's allocation, and seeded random
// instances for property tests.
//
// Items of the hard instances carry binary valuations scaled by the item's
// supply: an item of supply s valued by a set S is encoded with value s for
// agents in S and 0 otherwise.

#ifndef PMEAN_ADVERSARIES_HPP
#define PMEAN_ADVERSARIES_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pmean/allocators.hpp"
#include "pmean/welfare.hpp"

namespace pmean {

inline constexpr std::size_t kLargeInstanceAgents = 4096;

/// s_l = 1 - (|p| - alpha) / (2 sum_{i=1..L} |p|^i + 1) * sum_{i=L-l..L-1} |p|^i, l = 0..L.
inline std::vector<double> s_sequence(int L, double alpha, double p) {
  const double q = std::fabs(p);
  if (L < 1) throw InvalidInput("L must be at least 1");
  if (!(p < 0.0)) throw InvalidInput("the negative construction needs p < 0");
  if (!(alpha >= 0.0 && alpha < q)) throw InvalidInput("alpha must lie in [0, |p|)");
  std::vector<double> pw(L + 1);
  for (int i = 0; i <= L; ++i) pw[i] = std::pow(q, i);
  double denom = 1.0;
  for (int i = 1; i <= L; ++i) denom += 2.0 * pw[i];
  std::vector<double> s(L + 1);
  for (int l = 0; l <= L; ++l) {
    double acc = 0.0;
    for (int i = L - l; i <= L - 1; ++i) acc += pw[i];
    s[l] = 1.0 - (q - alpha) / denom * acc;
  }
  return s;
}

/// max_l |s_{l-1} + |p|(1 - s_l) - (s_L(1 + |p|) - alpha)|.
inline double s_recurrence_residual(const std::vector<double>& s, double alpha, double p) {
  const double q = std::fabs(p);
  const double rhs = s.back() * (1.0 + q) - alpha;
  double worst = 0.0;
  for (std::size_t l = 1; l < s.size(); ++l) worst = std::max(worst, std::fabs(s[l - 1] + q * (1.0 - s[l]) - rhs));
  return worst;
}

struct NegativeAdversaryConfig {
  std::size_t n = 0;
  double p = -1.0;
  int L = 1;
  double alpha = 0.0;
  std::vector<double> s;             // exact sequence
  std::vector<std::size_t> counts;   // c_l = round(n^{s_l}): ungrouped agents after round l
  std::vector<double> realized_s;    // log c_l / log n

  static NegativeAdversaryConfig make(std::size_t n, double p, int L, double alpha) {
    if (n < 2) throw ConfigError("the negative construction needs n >= 2");
    NegativeAdversaryConfig c;
    c.n = n;
    c.p = p;
    c.L = L;
    c.alpha = alpha;
    c.s = s_sequence(L, alpha, p);
    const double ln = std::log(static_cast<double>(n));
    for (int l = 0; l <= L; ++l) {
      const auto k = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), c.s[l]) + 0.5));
      c.counts.push_back(l == 0 ? n : k);
      c.realized_s.push_back(std::log(static_cast<double>(c.counts.back())) / ln);
    }
    for (int l = 1; l <= L; ++l)
      if (c.counts[l - 1] <= c.counts[l])
        throw ConfigError("group G_" + std::to_string(l) + " rounds to zero agents at n = " + std::to_string(n));
    if (c.counts[L] == 0) throw ConfigError("group B rounds to zero agents at n = " + std::to_string(n));
    return c;
  }

  std::size_t group_size(int l) const { return counts[l - 1] - counts[l]; }
  std::size_t bad_count() const { return counts.back(); }

  /// (1 + L/n^alpha)^(-1/|p|) n^(1 - s) / (L + 1) evaluated at a given s_L.
  double ratio_lower_bound(double sL) const {
    const double q = std::fabs(p), nn = static_cast<double>(n);
    return std::pow(1.0 + L / std::pow(nn, alpha), -1.0 / q) * std::pow(nn, 1.0 - sL) / (L + 1.0);
  }
};

struct PositiveAdversaryConfig {
  std::size_t n = 0;
  double p = 0.1;
  std::size_t M = 4;
  double raw_M = 0.0;
  int L = 1;
  std::vector<double> v;  // v[l-1] = e^{-L-1+l}
  std::vector<std::string> warnings;

  /// M = 1/(4p) if p >= loglog n / log n, else log n / (4 loglog n), rounded;
  /// a derived M below 4 is raised to 4 with a warning. An explicit M must be >= 4.
  static PositiveAdversaryConfig make(std::size_t n, double p, std::optional<std::size_t> M = std::nullopt) {
    if (n < 16) throw ConfigError("the positive construction needs n >= 16");
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("the positive construction needs 0 < p <= 1");
    PositiveAdversaryConfig c;
    if (p > 1.0 / 16.0) c.warnings.push_back("p = " + std::to_string(p) + " exceeds 1/16; the lower-bound argument assumes p <= 1/16");
    c.n = n;
    c.p = p;
    const double ln = std::log(static_cast<double>(n)), lln = std::log(ln);
    c.raw_M = p >= lln / ln ? 1.0 / (4.0 * p) : ln / (4.0 * lln);
    if (M) {
      if (*M < 4) throw ConfigError("M must be at least 4, got " + std::to_string(*M));
      c.M = *M;
    } else {
      const auto r = static_cast<std::size_t>(std::max(0.0, std::floor(c.raw_M + 0.5)));
      if (r < 4) c.warnings.push_back("derived M = " + std::to_string(c.raw_M) + " raised to 4");
      c.M = std::max<std::size_t>(4, r);
    }
    if (n < 2 * c.M) throw ConfigError("the positive construction needs n >= 2M");
    c.L = static_cast<int>(std::ceil(ln / 2.0));
    for (int l = 1; l <= c.L; ++l) c.v.push_back(std::exp(-c.L - 1.0 + l));
    return c;
  }

  double v_sum() const { return std::accumulate(v.begin(), v.end(), 0.0); }
};

struct AdversarialRun {
  Instance instance;
  Allocation allocation;
  std::vector<double> utilities;              // opponent's allocation, zero base
  std::vector<std::vector<std::size_t>> groups;  // negative: G_1..G_L, B; positive: B_1..B_L, G
  std::vector<std::string> warnings;
  AllocatorState final_state;
  std::vector<long> reference_owner;  // per item: owner in the explicit offline allocation, -1 if none
};

namespace detail {

/// Feeds items to an opponent one at a time and records its decisions.
class Dialogue {
 public:
  Dialogue(OnlineAllocator& alg, std::size_t n, BaseMode mode) : alg_(alg), n_(n), u_(n, 0.0) {
    std::vector<double> mono(n, 1.0);
    std::vector<double> base(n, mode == BaseMode::relaxed ? 1.0 / static_cast<double>(n) : 0.0);
    alg_.start(mono, base);
  }

  void feed(Item item) {
    auto out = alg_.step(item);
    std::vector<Allocation::Share> col;
    for (std::size_t a = 0; a < n_; ++a) {
      if (out.fractions[a] > 0.0) col.push_back({static_cast<std::uint32_t>(a), out.fractions[a]});
      u_[a] += item.values[a] * out.fractions[a];
    }
    cols_.push_back(std::move(col));
    items_.push_back(std::move(item));
  }

  const std::vector<double>& utilities() const { return u_; }
  std::size_t fed() const { return items_.size(); }
  void set_owner(std::size_t item, std::size_t agent) {
    if (owners_.size() <= item) owners_.resize(item + 1, -1);
    owners_[item] = static_cast<long>(agent);
  }

  AdversarialRun finish(std::vector<std::vector<std::size_t>> groups, std::vector<std::string> warnings) {
    AdversarialRun r;
    r.instance = Instance(n_, std::move(items_));
    r.allocation = Allocation(n_, cols_.size());
    for (std::size_t i = 0; i < cols_.size(); ++i) r.allocation.assign_column(i, std::move(cols_[i]));
    r.utilities = u_;
    r.groups = std::move(groups);
    r.warnings = std::move(warnings);
    r.final_state = alg_.state();
    owners_.resize(r.instance.size(), -1);
    r.reference_owner = std::move(owners_);
    return r;
  }

 private:
  OnlineAllocator& alg_;
  std::size_t n_;
  std::vector<double> u_;
  std::vector<Item> items_;
  std::vector<std::vector<Allocation::Share>> cols_;
  std::vector<long> owners_;
};

inline Item valued_by(std::size_t n, const std::vector<std::size_t>& agents, double supply) {
  Item it{std::vector<double>(n, 0.0)};
  for (auto a : agents) it.values[a] = supply;
  return it;
}

}  // namespace detail

/// Upper-triangular rounds followed by the makeup stage. The opponent is
/// started with unit monopolist utilities and the base implied by `mode`.
inline AdversarialRun run_negative_adversary(const NegativeAdversaryConfig& cfg, OnlineAllocator& opponent,
                                             BaseMode mode = BaseMode::relaxed) {
  const std::size_t n = cfg.n;
  const double nn = static_cast<double>(n);
  std::vector<std::string> warnings;
  if (n < kLargeInstanceAgents)
    warnings.push_back("n = " + std::to_string(n) + " is below 4096; asymptotic inequalities may not apply");
  detail::Dialogue d(opponent, n, mode);
  std::vector<std::size_t> ungrouped(n);
  std::iota(ungrouped.begin(), ungrouped.end(), 0);
  std::vector<std::vector<std::size_t>> groups;
  for (int l = 1; l <= cfg.L; ++l) {
    const double supply = static_cast<double>(cfg.counts[l - 1] - cfg.counts[l]) / nn;
    d.feed(detail::valued_by(n, ungrouped, supply));
    const auto& u = d.utilities();
    std::stable_sort(ungrouped.begin(), ungrouped.end(), [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
    const std::size_t g = cfg.group_size(l);
    std::vector<std::size_t> grp(ungrouped.begin(), ungrouped.begin() + g);
    ungrouped.erase(ungrouped.begin(), ungrouped.begin() + g);
    std::sort(grp.begin(), grp.end());
    std::sort(ungrouped.begin(), ungrouped.end());
    groups.push_back(std::move(grp));
  }
  std::vector<std::pair<std::size_t, double>> privates;
  for (int l = 1; l <= cfg.L; ++l)
    for (auto a : groups[l - 1]) privates.push_back({a, static_cast<double>(cfg.counts[l]) / nn});
  std::sort(privates.begin(), privates.end());
  for (auto [a, s] : privates) d.feed(detail::valued_by(n, {a}, s));
  d.feed(detail::valued_by(n, ungrouped, static_cast<double>(cfg.bad_count()) / nn));
  groups.push_back(ungrouped);
  return d.finish(std::move(groups), std::move(warnings));
}

/// Rounds over subsets of M ungrouped agents followed by the makeup stage.
inline AdversarialRun run_positive_adversary(const PositiveAdversaryConfig& cfg, OnlineAllocator& opponent,
                                             BaseMode mode = BaseMode::relaxed) {
  const std::size_t n = cfg.n;
  std::vector<std::string> warnings = cfg.warnings;
  if (n < kLargeInstanceAgents)
    warnings.push_back("n = " + std::to_string(n) + " is below 4096; asymptotic inequalities may not apply");
  detail::Dialogue d(opponent, n, mode);
  std::vector<std::size_t> ungrouped(n);
  std::iota(ungrouped.begin(), ungrouped.end(), 0);
  std::vector<std::vector<std::size_t>> groups;
  for (int l = 1; l <= cfg.L; ++l) {
    std::vector<std::vector<std::size_t>> subsets;
    for (std::size_t k = 0; k < ungrouped.size(); k += cfg.M)
      subsets.emplace_back(ungrouped.begin() + k, ungrouped.begin() + std::min(ungrouped.size(), k + cfg.M));
    const std::size_t first = d.fed();
    for (const auto& s : subsets) d.feed(detail::valued_by(n, s, cfg.v[l - 1]));
    const auto& u = d.utilities();
    std::vector<std::size_t> bad;
    for (std::size_t k = 0; k < subsets.size(); ++k) {
      std::size_t lo = subsets[k].front();
      for (auto a : subsets[k])
        if (u[a] < u[lo]) lo = a;
      bad.push_back(lo);
      d.set_owner(first + k, lo);
    }
    std::vector<std::size_t> rest;
    std::set_difference(ungrouped.begin(), ungrouped.end(), bad.begin(), bad.end(), std::back_inserter(rest));
    ungrouped = std::move(rest);
    groups.push_back(std::move(bad));
  }
  const double top = 1.0 - cfg.v_sum();
  for (auto a : ungrouped) {
    d.set_owner(d.fed(), a);
    d.feed(detail::valued_by(n, {a}, top));
  }
  std::vector<std::size_t> all_bad;
  for (const auto& g : groups) all_bad.insert(all_bad.end(), g.begin(), g.end());
  std::sort(all_bad.begin(), all_bad.end());
  d.feed(detail::valued_by(n, all_bad, top));
  for (int l = 2; l <= cfg.L; ++l) {
    std::vector<std::size_t> earlier;
    for (int j = 1; j < l; ++j) earlier.insert(earlier.end(), groups[j - 1].begin(), groups[j - 1].end());
    std::sort(earlier.begin(), earlier.end());
    d.feed(detail::valued_by(n, earlier, cfg.v[l - 1]));
  }
  groups.push_back(ungrouped);
  auto run = d.finish(std::move(groups), std::move(warnings));
  const auto rep = validate_instance(run.instance, 1e-9);
  if (!rep.pass) throw std::logic_error("positive construction does not sum to unit monopolist utilities");
  return run;
}

/// Items valued by every agent that values them at all go uniformly to the
/// bad group; each private makeup item goes to its owner. Negative construction only.
inline Allocation negative_reference_allocation(const AdversarialRun& run) {
  const auto& inst = run.instance;
  const auto& bad = run.groups.back();
  Allocation x(inst.agents(), inst.size());
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const auto& v = inst.item(i).values;
    const bool for_bad = v[bad.front()] > 0.0;
    if (for_bad) {
      std::vector<Allocation::Share> col;
      for (auto a : bad) col.push_back({static_cast<std::uint32_t>(a), 1.0 / static_cast<double>(bad.size())});
      x.assign_column(i, std::move(col));
    } else {
      for (std::size_t a = 0; a < inst.agents(); ++a)
        if (v[a] > 0.0) x.set(a, i, 1.0);
    }
  }
  return x;
}

/// Round-l items go to that subset's B_l member, private makeup items to
/// their owners; the shared makeup items are left unallocated. Positive construction only.
inline Allocation positive_reference_allocation(const AdversarialRun& run) {
  Allocation x(run.instance.agents(), run.instance.size());
  for (std::size_t i = 0; i < run.reference_owner.size(); ++i)
    if (run.reference_owner[i] >= 0) x.set(static_cast<std::size_t>(run.reference_owner[i]), i, 1.0);
  return x;
}

enum class Distribution { uniform, sparse, correlated };

struct RandomInstanceOptions {
  Distribution dist = Distribution::uniform;
  std::size_t sparse_k = 2;                   // agents per item for Distribution::sparse
  std::optional<std::vector<double>> monopolist;  // V_a; unit when absent
};

/// Seeded random instance; each agent's row is rescaled to sum to V_a exactly.
inline Instance random_instance(std::size_t n, std::size_t m, std::uint64_t seed,
                                const RandomInstanceOptions& opts = {}) {
  if (n == 0 || m == 0) throw InvalidInput("random_instance needs n, m >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> quality(m);
  for (double& q : quality) q = unit(rng);
  const double keep = std::min(1.0, static_cast<double>(opts.sparse_k) / static_cast<double>(n));
  auto draw = [&](std::size_t i) {
    switch (opts.dist) {
      case Distribution::uniform: return unit(rng);
      case Distribution::sparse: return unit(rng) < keep ? unit(rng) : 0.0;
      case Distribution::correlated: return quality[i] * (0.5 + unit(rng));
    }
    return 0.0;
  };
  std::vector<std::vector<double>> rows(n, std::vector<double>(m));
  for (std::size_t a = 0; a < n; ++a) {
    double total = 0.0;
    for (int attempt = 0; attempt < 1000 && !(total > 0.0); ++attempt) {
      total = 0.0;
      for (std::size_t i = 0; i < m; ++i) total += rows[a][i] = draw(i);
    }
    if (!(total > 0.0)) throw InvalidInput("could not draw a nonzero row for agent " + std::to_string(a));
    const double V = opts.monopolist ? opts.monopolist->at(a) : 1.0;
    for (double& x : rows[a]) x = x / total * V;
  }
  std::vector<Item> items(m, Item{std::vector<double>(n)});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t a = 0; a < n; ++a) items[i].values[a] = rows[a][i];
  return Instance(n, std::move(items), opts.monopolist);
}

}  // namespace pmean

#endif  // PMEAN_ADVERSARIES_HPP
