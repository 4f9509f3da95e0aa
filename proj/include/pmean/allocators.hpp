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

// Online allocators. Each rule exists twice: as a pure step function over an
// AllocatorState (easy to test in isolation) and as an OnlineAllocator object
// that owns the state and commits each step.

#ifndef PMEAN_ALLOCATORS_HPP
#define PMEAN_ALLOCATORS_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmean/waterfill.hpp"
#include "pmean/welfare.hpp"

namespace pmean {

enum class Granularity { atomic, waterfill };

inline std::string_view to_string(Granularity g) { return g == Granularity::atomic ? "atomic" : "waterfill"; }

inline Granularity parse_granularity(std::string_view s) {
  if (s == "atomic") return Granularity::atomic;
  if (s == "waterfill") return Granularity::waterfill;
  throw InvalidInput("unknown granularity '" + std::string(s) + "'");
}

struct AllocatorState {
  std::size_t n = 0;
  std::vector<double> u;
  std::vector<double> remaining;
  std::optional<double> phi;
  std::vector<double> gammas;
  std::vector<double> alphas;
  std::optional<PMeanParam> p;

  /// R_a = remaining[a] / phi.
  double regularizer(std::size_t a) const {
    if (!phi) throw ConfigError("regularizer requested but phi is unset");
    return remaining[a] / *phi;
  }
  std::vector<double> regularized_utilities() const {
    std::vector<double> out(n);
    for (std::size_t a = 0; a < n; ++a) out[a] = u[a] + regularizer(a);
    return out;
  }
};

struct StepOutcome {
  std::vector<double> fractions;
  std::optional<double> alpha;
};

/// Phi = sqrt(n log(n+1)).
inline double mixed_phi(std::size_t n) {
  const double nn = static_cast<double>(n);
  return std::sqrt(nn * std::log(nn + 1.0));
}

namespace detail {

inline void check_item(const AllocatorState& s, const Item& item) {
  if (item.values.size() != s.n)
    throw InvalidInput("item has " + std::to_string(item.values.size()) + " values, state has " + std::to_string(s.n) +
                       " agents");
}

inline void require_positive_utility(const AllocatorState& s, const Item& item) {
  for (std::size_t a = 0; a < s.n; ++a)
    if (item.values[a] > 0.0 && !(s.u[a] > 0.0))
      throw PreconditionError("Nashian rule needs positive utility for agent " + std::to_string(a));
}

inline PMeanParam require_pd_exponent(const AllocatorState& s) {
  if (!s.p || !s.p->is_finite() || !s.p->positive())
    throw ConfigError("primal-dual allocators need a finite p in (0, 1]");
  return *s.p;
}

}  // namespace detail

inline StepOutcome allocate_uniform(std::size_t n) {
  if (n == 0) throw InvalidInput("uniform allocation over zero agents");
  return {std::vector<double>(n, 1.0 / static_cast<double>(n)), std::nullopt};
}

/// Whole item to argmax values[a]/u[a]; lowest index wins ties.
inline StepOutcome allocate_nashian_atomic(const AllocatorState& s, const Item& item, double supply = 1.0) {
  detail::check_item(s, item);
  detail::require_positive_utility(s, item);
  StepOutcome out{std::vector<double>(s.n, 0.0), std::nullopt};
  std::optional<std::size_t> best;
  double best_ratio = 0.0;
  for (std::size_t a = 0; a < s.n; ++a) {
    if (item.values[a] <= 0.0) continue;
    const double r = item.values[a] / s.u[a];
    if (!best || r > best_ratio) {
      best = a;
      best_ratio = r;
    }
  }
  if (best) out.fractions[*best] = supply;
  return out;
}

inline StepOutcome allocate_nashian_waterfill(const AllocatorState& s, const Item& item, double supply = 1.0) {
  detail::check_item(s, item);
  detail::require_positive_utility(s, item);
  auto wf = waterfill(s.u, item.values, NashRate{}, supply);
  return {std::move(wf.fractions), std::nullopt};
}

/// Feeds the item to the positive-value agents of smallest u + remaining/phi.
inline StepOutcome allocate_egalitarian_regularized(const AllocatorState& s, const Item& item, Granularity mode,
                                                    double supply = 1.0) {
  detail::check_item(s, item);
  if (!s.phi) throw ConfigError("egalitarian rule needs phi");
  const auto reg = s.regularized_utilities();
  if (mode == Granularity::waterfill) {
    auto wf = level_fill(reg, item.values, supply);
    return {std::move(wf.fractions), std::nullopt};
  }
  StepOutcome out{std::vector<double>(s.n, 0.0), std::nullopt};
  std::optional<std::size_t> best;
  for (std::size_t a = 0; a < s.n; ++a) {
    if (item.values[a] <= 0.0) continue;
    if (!best || reg[a] < reg[*best]) best = a;
  }
  if (best) out.fractions[*best] = supply;
  return out;
}

/// Half the item by the Nashian rule, half by the regularized egalitarian
/// rule, both evaluated on the pre-step state.
inline StepOutcome allocate_mixed(const AllocatorState& s, const Item& item, Granularity mode) {
  auto nash = mode == Granularity::atomic ? allocate_nashian_atomic(s, item, 0.5)
                                          : allocate_nashian_waterfill(s, item, 0.5);
  auto egal = allocate_egalitarian_regularized(s, item, mode, 0.5);
  for (std::size_t a = 0; a < s.n; ++a) nash.fractions[a] += egal.fractions[a];
  return nash;
}

/// Greedy primal-dual rule with gamma = U/p.
inline StepOutcome allocate_pd_greedy(const AllocatorState& s, const Item& item, Granularity mode) {
  detail::check_item(s, item);
  const double p = detail::require_pd_exponent(s).value();
  StepOutcome out{std::vector<double>(s.n, 0.0), 0.0};
  if (item.all_zero()) return out;
  if (p == 1.0 || mode == Granularity::atomic) {
    auto prio = [&](std::size_t a) {
      if (p == 1.0) return item.values[a];
      return s.gammas[a] > 0.0 ? item.values[a] * std::pow(s.gammas[a], p - 1.0)
                               : std::numeric_limits<double>::infinity();
    };
    std::optional<std::size_t> best;
    double best_prio = 0.0;
    for (std::size_t a = 0; a < s.n; ++a) {
      if (item.values[a] <= 0.0) continue;
      const double pr = prio(a);
      if (!best || pr > best_prio || (pr == best_prio && item.values[a] > item.values[*best])) {
        best = a;
        best_prio = pr;
      }
    }
    out.fractions[*best] = 1.0;
    if (std::isinf(best_prio)) {
      const double g = (s.u[*best] + item.values[*best]) / p;
      best_prio = item.values[*best] * std::pow(g, p - 1.0);
    }
    out.alpha = best_prio;
    return out;
  }
  auto wf = waterfill(s.u, item.values, PowerRate{p});
  out.fractions = std::move(wf.fractions);
  out.alpha = wf.alpha;
  return out;
}

/// Regularized primal-dual rule with gamma(U) = U (1 + log(1+1/n) - log U).
inline StepOutcome allocate_regularized_pd(const AllocatorState& s, const Item& item, Granularity mode) {
  detail::check_item(s, item);
  const double p = detail::require_pd_exponent(s).value();
  StepOutcome out{std::vector<double>(s.n, 0.0), 0.0};
  if (item.all_zero()) return out;
  const RegularizedRate rate{p, s.n};
  if (mode == Granularity::atomic || p == 1.0) {
    std::optional<std::size_t> best;
    double best_prio = 0.0;
    for (std::size_t a = 0; a < s.n; ++a) {
      if (item.values[a] <= 0.0) continue;
      const double pr = p == 1.0 ? item.values[a] : item.values[a] * rate.rate(s.u[a]);
      if (!best || pr > best_prio) {
        best = a;
        best_prio = pr;
      }
    }
    out.fractions[*best] = 1.0;
    out.alpha = best_prio;
    return out;
  }
  auto wf = waterfill(s.u, item.values, rate);
  out.fractions = std::move(wf.fractions);
  out.alpha = wf.alpha;
  return out;
}

/// Stateful allocator driven by run_online. step() computes the outcome for
/// the current state and commits it.
class OnlineAllocator {
 public:
  virtual ~OnlineAllocator() = default;
  virtual std::string name() const = 0;

  /// monopolist: V_a used to seed `remaining`; base: initial utilities.
  virtual void start(std::span<const double> monopolist, std::span<const double> base) {
    if (monopolist.size() != base.size()) throw InvalidInput("monopolist and base lengths differ");
    state_ = AllocatorState{};
    state_.n = base.size();
    state_.u.assign(base.begin(), base.end());
    state_.remaining.assign(monopolist.begin(), monopolist.end());
  }

  virtual StepOutcome step(const Item& item) {
    auto out = decide(item);
    commit(item, out);
    return out;
  }

  /// Utility received outside this allocator's own decisions.
  virtual void credit(std::span<const double> gains) {
    for (std::size_t a = 0; a < state_.n; ++a) state_.u[a] += gains[a];
    refresh_duals();
  }

  virtual const AllocatorState& state() const { return state_; }

 protected:
  virtual StepOutcome decide(const Item& item) = 0;
  virtual void refresh_duals() {}

  void commit(const Item& item, const StepOutcome& out) {
    for (std::size_t a = 0; a < state_.n; ++a) {
      state_.u[a] += item.values[a] * out.fractions[a];
      state_.remaining[a] -= item.values[a];
    }
    if (out.alpha) state_.alphas.push_back(*out.alpha);
    refresh_duals();
  }

  AllocatorState state_;
};

class UniformAllocator final : public OnlineAllocator {
 public:
  std::string name() const override { return "uniform"; }

 protected:
  StepOutcome decide(const Item&) override { return allocate_uniform(state_.n); }
};

class NashianAllocator final : public OnlineAllocator {
 public:
  explicit NashianAllocator(Granularity g = Granularity::waterfill) : mode_(g) {}
  std::string name() const override { return "nashian"; }

 protected:
  StepOutcome decide(const Item& item) override {
    return mode_ == Granularity::atomic ? allocate_nashian_atomic(state_, item)
                                        : allocate_nashian_waterfill(state_, item);
  }

 private:
  Granularity mode_;
};

class MixedAllocator final : public OnlineAllocator {
 public:
  explicit MixedAllocator(Granularity g = Granularity::waterfill) : mode_(g) {}
  std::string name() const override { return "mixed"; }
  void start(std::span<const double> monopolist, std::span<const double> base) override {
    OnlineAllocator::start(monopolist, base);
    state_.phi = mixed_phi(state_.n);
  }

 protected:
  StepOutcome decide(const Item& item) override { return allocate_mixed(state_, item, mode_); }

 private:
  Granularity mode_;
};

class PdGreedyAllocator final : public OnlineAllocator {
 public:
  PdGreedyAllocator(PMeanParam p, Granularity g = Granularity::waterfill) : p_(p), mode_(g) {
    if (!p.is_finite() || !p.positive()) throw ConfigError("pd_greedy needs 0 < p <= 1, got " + p.to_string());
  }
  std::string name() const override { return "pd_greedy"; }
  void start(std::span<const double> monopolist, std::span<const double> base) override {
    OnlineAllocator::start(monopolist, base);
    state_.p = p_;
    refresh_duals();
  }

 protected:
  StepOutcome decide(const Item& item) override { return allocate_pd_greedy(state_, item, mode_); }
  void refresh_duals() override {
    state_.gammas.resize(state_.n);
    for (std::size_t a = 0; a < state_.n; ++a) state_.gammas[a] = state_.u[a] / p_.value();
  }

 private:
  PMeanParam p_;
  Granularity mode_;
};

class RegularizedPdAllocator final : public OnlineAllocator {
 public:
  RegularizedPdAllocator(PMeanParam p, Granularity g = Granularity::waterfill) : p_(p), mode_(g) {
    if (!p.is_finite() || !p.positive()) throw ConfigError("reg_pd needs 0 < p <= 1, got " + p.to_string());
  }
  std::string name() const override { return "reg_pd"; }
  void start(std::span<const double> monopolist, std::span<const double> base) override {
    for (double v : monopolist)
      if (v > 1.0 + 1e-12) throw ConfigError("reg_pd needs monopolist utilities at most 1");
    OnlineAllocator::start(monopolist, base);
    state_.p = p_;
    refresh_duals();
  }

 protected:
  StepOutcome decide(const Item& item) override { return allocate_regularized_pd(state_, item, mode_); }
  void refresh_duals() override {
    state_.gammas.resize(state_.n);
    for (std::size_t a = 0; a < state_.n; ++a) state_.gammas[a] = regularized_gamma(state_.u[a], state_.n);
  }

 private:
  PMeanParam p_;
  Granularity mode_;
};

/// Gives `share` of every item uniformly and the rest to `inner`. The inner
/// allocator sees the scaled instance and starts with the whole uniform part,
/// share * V_a / n, as its base, so its final utilities equal the physical ones.
class UniformMix final : public OnlineAllocator {
 public:
  UniformMix(std::unique_ptr<OnlineAllocator> inner, double share) : inner_(std::move(inner)), share_(share) {
    if (!(share >= 0.0 && share <= 1.0)) throw ConfigError("uniform share must lie in [0, 1]");
  }
  std::string name() const override { return inner_->name(); }
  double share() const { return share_; }
  const OnlineAllocator& inner() const { return *inner_; }

  void start(std::span<const double> monopolist, std::span<const double> base) override {
    const double n = static_cast<double>(base.size());
    std::vector<double> scaled(monopolist.begin(), monopolist.end()), seeded(base.begin(), base.end());
    for (std::size_t a = 0; a < scaled.size(); ++a) {
      seeded[a] += share_ * scaled[a] / n;
      scaled[a] *= 1.0 - share_;
    }
    inner_->start(scaled, seeded);
  }

  StepOutcome step(const Item& item) override {
    const double each = share_ / static_cast<double>(item.values.size());
    auto out = inner_->step(item.scaled(1.0 - share_));
    for (double& f : out.fractions) f = each + (1.0 - share_) * f;
    return out;
  }

  void credit(std::span<const double> gains) override { inner_->credit(gains); }
  const AllocatorState& state() const override { return inner_->state(); }

 protected:
  StepOutcome decide(const Item&) override { throw std::logic_error("UniformMix::decide is not used"); }

 private:
  std::unique_ptr<OnlineAllocator> inner_;
  double share_;
};

inline std::unique_ptr<OnlineAllocator> compose_with_uniform(std::unique_ptr<OnlineAllocator> inner,
                                                             double uniform_share) {
  return std::make_unique<UniformMix>(std::move(inner), uniform_share);
}

/// Allocator by CLI id: uniform | nashian | mixed | pd_greedy | reg_pd.
inline std::unique_ptr<OnlineAllocator> make_allocator(std::string_view id, Granularity g, const PMeanParam& p) {
  if (id == "uniform") return std::make_unique<UniformAllocator>();
  if (id == "nashian") return std::make_unique<NashianAllocator>(g);
  if (id == "mixed") return std::make_unique<MixedAllocator>(g);
  if (id == "pd_greedy") return std::make_unique<PdGreedyAllocator>(p, g);
  if (id == "reg_pd") return std::make_unique<RegularizedPdAllocator>(p, g);
  throw InvalidInput("unknown algorithm '" + std::string(id) + "'");
}

enum class BaseMode { relaxed, physical };

struct Snapshot {
  std::vector<double> u;
  std::vector<double> remaining;
};

struct RunOptions {
  bool allow_invalid = false;
  bool record_snapshots = true;
  /// Called with (t, state) before item t and once more with t = m at the end.
  std::function<void(std::size_t, const AllocatorState&)> observer;
};

struct RunTrace {
  std::vector<Snapshot> snapshots;  // state before each item
  Allocation allocation;
  AllocatorState final_state;
  std::vector<double> base;
};

/// Feeds the instance's items in order. Relaxed mode starts every agent at
/// V_a/n without allocating anything; physical mode starts at zero.
inline RunTrace run_online(OnlineAllocator& alg, const Instance& inst, BaseMode mode, const RunOptions& opts = {}) {
  if (!opts.allow_invalid) {
    const auto rep = validate_instance(inst, 1e-6);
    if (!rep.pass)
      throw InvalidInput("instance fails validation (max monopolist deviation " + std::to_string(rep.max_deviation) +
                         (rep.nonnegative ? "" : ", negative values") + ")");
  }
  const std::size_t n = inst.agents(), m = inst.size();
  RunTrace trace;
  trace.base = mode == BaseMode::relaxed ? relaxed_base(inst) : std::vector<double>(n, 0.0);
  const auto mono = inst.monopolists();
  alg.start(mono, trace.base);
  trace.allocation = Allocation(n, m);
  if (opts.record_snapshots) trace.snapshots.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& st = alg.state();
    if (opts.record_snapshots) trace.snapshots.push_back({st.u, st.remaining});
    if (opts.observer) opts.observer(i, st);
    auto out = alg.step(inst.item(i));
    trace.allocation.set_item(i, out.fractions);
  }
  if (opts.observer) opts.observer(m, alg.state());
  trace.final_state = alg.state();
  return trace;
}

}  // namespace pmean

#endif  // PMEAN_ALLOCATORS_HPP
