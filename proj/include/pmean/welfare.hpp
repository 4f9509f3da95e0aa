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

// Data model for online allocation of divisible items: instances, fractional
// allocations, per-agent utilities and the p-mean welfare functional.

#ifndef PMEAN_WELFARE_HPP
#define PMEAN_WELFARE_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pmean {

/// Malformed data handed to an operation (dimension mismatch, negative utility, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was configured with parameters outside its domain.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A state-dependent precondition does not hold (e.g. zero utility under a ratio rule).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline constexpr double kNashThreshold = 1e-9;
inline constexpr double kFeasibilitySlack = 1e-12;

/// Exponent of the p-mean on the extended range [-inf, 1].
///
/// Zero and minus infinity are explicit tags rather than numeric limits, so
/// the Nash branch is evaluated as a geometric mean and the egalitarian branch
/// as an exact minimum.
class PMeanParam {
 public:
  enum class Kind { finite, nash, neg_infinity };

  static PMeanParam finite(double p) {
    if (std::isnan(p) || p > 1.0) throw ConfigError("p must lie in [-inf, 1], got " + std::to_string(p));
    if (std::isinf(p)) return neg_infinity();
    if (std::fabs(p) < kNashThreshold) return nash();
    return PMeanParam(Kind::finite, p);
  }
  static PMeanParam nash() { return PMeanParam(Kind::nash, 0.0); }
  static PMeanParam neg_infinity() {
    return PMeanParam(Kind::neg_infinity, -std::numeric_limits<double>::infinity());
  }

  /// Accepts "nash", "-inf" (also "neg_infinity", "-infinity") or a decimal number.
  static PMeanParam parse(std::string_view text) {
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "nash" || s == "0") return nash();
    if (s == "-inf" || s == "-infinity" || s == "neg_infinity" || s == "egalitarian") return neg_infinity();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw InvalidInput("cannot parse p from '" + s + "'");
    return finite(v);
  }

  Kind kind() const { return kind_; }
  bool is_nash() const { return kind_ == Kind::nash; }
  bool is_neg_infinity() const { return kind_ == Kind::neg_infinity; }
  bool is_finite() const { return kind_ == Kind::finite; }
  /// Numeric exponent: 0 for nash, -inf for the egalitarian tag.
  double value() const { return value_; }
  double magnitude() const { return std::fabs(value_); }
  bool negative() const { return value_ < 0.0; }
  bool positive() const { return value_ > 0.0; }

  std::string to_string() const {
    if (is_nash()) return "nash";
    if (is_neg_infinity()) return "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, value_);
    return std::string(buf, res.ptr);
  }

  friend bool operator==(const PMeanParam&, const PMeanParam&) = default;

 private:
  PMeanParam(Kind k, double v) : kind_(k), value_(v) {}
  Kind kind_;
  double value_;
};

using UtilityVector = std::vector<double>;

/// One divisible item: values[a] is the utility agent a gets from the whole item.
struct Item {
  std::vector<double> values;

  double value(std::size_t agent) const { return values[agent]; }
  bool all_zero() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
  }
  Item scaled(double c) const {
    Item out{values};
    for (double& v : out.values) v *= c;
    return out;
  }
};

/// Agents plus items in arrival order. Monopolist sums are checked by
/// validate_instance, not here, so that invalid inputs can still be reported on.
class Instance {
 public:
  Instance() = default;
  Instance(std::size_t n, std::vector<Item> items, std::optional<std::vector<double>> predicted = std::nullopt)
      : n_(n), items_(std::move(items)), predicted_(std::move(predicted)) {
    if (n_ == 0) throw InvalidInput("instance needs at least one agent");
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (items_[i].values.size() != n_)
        throw InvalidInput("item " + std::to_string(i) + " has " + std::to_string(items_[i].values.size()) +
                           " values, expected " + std::to_string(n_));
      for (double v : items_[i].values)
        if (!std::isfinite(v)) throw InvalidInput("item " + std::to_string(i) + " has a non-finite value");
    }
    if (predicted_) {
      if (predicted_->size() != n_) throw InvalidInput("predicted_monopolist must have one entry per agent");
      for (double v : *predicted_)
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("predicted_monopolist entries must be positive");
    }
  }

  std::size_t agents() const { return n_; }
  std::size_t size() const { return items_.size(); }
  const std::vector<Item>& items() const { return items_; }
  const Item& item(std::size_t i) const { return items_[i]; }
  const std::optional<std::vector<double>>& predicted_monopolist() const { return predicted_; }

  /// V_a: the predicted monopolist utility, 1 when no prediction is attached.
  double monopolist(std::size_t a) const { return predicted_ ? (*predicted_)[a] : 1.0; }
  std::vector<double> monopolists() const {
    std::vector<double> out(n_);
    for (std::size_t a = 0; a < n_; ++a) out[a] = monopolist(a);
    return out;
  }
  /// max V_a / min V_a.
  double monopolist_ratio() const {
    auto v = monopolists();
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi / *lo;
  }
  /// Sum of an agent's values over all items.
  double total_value(std::size_t a) const {
    double s = 0.0;
    for (const auto& it : items_) s += it.values[a];
    return s;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Item> items_;
  std::optional<std::vector<double>> predicted_;
};

/// Fractional assignment x[a][i], stored per item as the list of nonzero shares.
class Allocation {
 public:
  struct Share {
    std::uint32_t agent;
    double fraction;
  };

  Allocation() = default;
  Allocation(std::size_t n, std::size_t m) : n_(n), columns_(m) {}

  std::size_t agents() const { return n_; }
  std::size_t items() const { return columns_.size(); }

  /// Overwrites item i's column with a dense vector of fractions.
  void set_item(std::size_t i, std::span<const double> fractions) {
    if (fractions.size() != n_) throw InvalidInput("fraction vector length does not match agent count");
    auto& col = columns_.at(i);
    col.clear();
    for (std::size_t a = 0; a < n_; ++a) {
      if (fractions[a] < 0.0) throw InvalidInput("negative allocation fraction");
      if (fractions[a] > 0.0) col.push_back({static_cast<std::uint32_t>(a), fractions[a]});
    }
  }
  void set(std::size_t a, std::size_t i, double fraction) {
    if (a >= n_) throw InvalidInput("agent index out of range");
    if (fraction < 0.0) throw InvalidInput("negative allocation fraction");
    auto& col = columns_.at(i);
    auto it = std::find_if(col.begin(), col.end(), [&](const Share& s) { return s.agent == a; });
    if (it != col.end()) {
      if (fraction == 0.0) col.erase(it);
      else it->fraction = fraction;
    } else if (fraction > 0.0) {
      auto pos = std::lower_bound(col.begin(), col.end(), a, [](const Share& s, std::size_t v) { return s.agent < v; });
      col.insert(pos, {static_cast<std::uint32_t>(a), fraction});
    }
  }
  /// Overwrites item i's column with shares sorted by agent.
  void assign_column(std::size_t i, std::vector<Share> shares) {
    for (std::size_t k = 0; k < shares.size(); ++k) {
      if (shares[k].agent >= n_ || shares[k].fraction < 0.0 || (k > 0 && shares[k - 1].agent >= shares[k].agent))
        throw InvalidInput("column shares must be non-negative and sorted by agent");
    }
    std::erase_if(shares, [](const Share& s) { return s.fraction == 0.0; });
    columns_.at(i) = std::move(shares);
  }
  void append_item(std::span<const double> fractions) {
    columns_.emplace_back();
    set_item(columns_.size() - 1, fractions);
  }

  double operator()(std::size_t a, std::size_t i) const {
    for (const auto& s : columns_.at(i))
      if (s.agent == a) return s.fraction;
    return 0.0;
  }
  const std::vector<Share>& column(std::size_t i) const { return columns_.at(i); }

  double column_sum(std::size_t i) const {
    double s = 0.0;
    for (const auto& sh : columns_.at(i)) s += sh.fraction;
    return s;
  }
  bool feasible(double slack = kFeasibilitySlack) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (column_sum(i) > 1.0 + slack) return false;
    return true;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::vector<Share>> columns_;
};

/// Identity instance: item a is worth 1 to agent a and 0 to everyone else.
inline Instance identity_instance(std::size_t n) {
  std::vector<Item> items(n, Item{std::vector<double>(n, 0.0)});
  for (std::size_t a = 0; a < n; ++a) items[a].values[a] = 1.0;
  return Instance(n, std::move(items));
}

inline Allocation identity_allocation(std::size_t n) {
  Allocation x(n, n);
  for (std::size_t a = 0; a < n; ++a) x.set(a, a, 1.0);
  return x;
}

namespace detail {

// log((1/n) * sum exp(terms)), stable for terms of any magnitude.
inline double log_mean_exp(std::span<const double> terms) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double t : terms) hi = std::max(hi, t);
  if (std::isinf(hi)) return hi;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - hi);
  return hi + std::log(s / static_cast<double>(terms.size()));
}

}  // namespace detail

/// Generalized mean of the utilities. Evaluated in log space for finite p and
/// for nash; returns 0 when p <= 0 and some utility is 0.
inline double p_mean_welfare(std::span<const double> u, const PMeanParam& p) {
  if (u.empty()) throw InvalidInput("p_mean_welfare of an empty utility vector");
  double lo = std::numeric_limits<double>::infinity();
  for (double x : u) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidInput("utilities must be finite and non-negative");
    lo = std::min(lo, x);
  }
  if (p.is_neg_infinity()) return lo;
  if (lo == 0.0 && !p.positive()) return 0.0;
  if (p.is_nash()) {
    double s = 0.0;
    for (double x : u) s += std::log(x);
    return std::exp(s / static_cast<double>(u.size()));
  }
  const double e = p.value();
  std::vector<double> terms(u.size());
  for (std::size_t a = 0; a < u.size(); ++a)
    terms[a] = u[a] > 0.0 ? e * std::log(u[a]) : -std::numeric_limits<double>::infinity();
  if (lo > 0.0 && std::ranges::all_of(terms, [](double t) { return std::fabs(t) < 1.0; })) {
    double s = 0.0;
    for (double t : terms) s += std::expm1(t);
    return std::exp(std::log1p(s / static_cast<double>(u.size())) / e);
  }
  return std::exp(detail::log_mean_exp(terms) / e);
}

/// u[a] = base[a] + sum_i values[a][i] * x[a][i].
inline UtilityVector utilities_of(const Instance& inst, const Allocation& x, std::span<const double> base) {
  const std::size_t n = inst.agents();
  if (x.agents() != n || x.items() != inst.size())
    throw InvalidInput("allocation is " + std::to_string(x.agents()) + "x" + std::to_string(x.items()) +
                       ", instance is " + std::to_string(n) + "x" + std::to_string(inst.size()));
  if (base.size() != n) throw InvalidInput("base utility vector length does not match agent count");
  UtilityVector u(base.begin(), base.end());
  for (double b : u)
    if (b < 0.0) throw InvalidInput("base utilities must be non-negative");
  for (std::size_t i = 0; i < inst.size(); ++i)
    for (const auto& s : x.column(i)) u[s.agent] += inst.item(i).values[s.agent] * s.fraction;
  return u;
}

inline UtilityVector utilities_of(const Instance& inst, const Allocation& x) {
  std::vector<double> zero(inst.agents(), 0.0);
  return utilities_of(inst, x, zero);
}

/// V_a / n per agent: the base utility a uniform allocation guarantees.
inline std::vector<double> relaxed_base(const Instance& inst) {
  auto v = inst.monopolists();
  for (double& x : v) x /= static_cast<double>(inst.agents());
  return v;
}

struct ValidationReport {
  bool pass = true;
  bool nonnegative = true;
  std::vector<double> deviation;  // |sum_i v_ai - V_a| per agent
  std::optional<std::size_t> worst_agent;
  double max_deviation = 0.0;
  double monopolist_ratio = 1.0;  // realized K
};

inline ValidationReport validate_instance(const Instance& inst, double tol) {
  ValidationReport r;
  const std::size_t n = inst.agents();
  r.deviation.assign(n, 0.0);
  for (const auto& it : inst.items())
    for (double v : it.values)
      if (v < 0.0) r.nonnegative = false;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    const double total = inst.total_value(a);
    r.deviation[a] = std::fabs(total - inst.monopolist(a));
    if (r.deviation[a] > r.max_deviation) {
      r.max_deviation = r.deviation[a];
      r.worst_agent = a;
    }
    lo = std::min(lo, inst.monopolist(a));
    hi = std::max(hi, inst.monopolist(a));
  }
  r.monopolist_ratio = hi / lo;
  r.pass = r.nonnegative && r.max_deviation <= tol;
  return r;
}

}  // namespace pmean

#endif  // PMEAN_WELFARE_HPP
