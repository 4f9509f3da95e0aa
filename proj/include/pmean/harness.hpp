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

// Orchestration shared by the CLI and the tests: one evaluated run (online
// allocator, offline optimum, certificate suite) and sweeps over grids of
// such runs.

#ifndef PMEAN_HARNESS_HPP
#define PMEAN_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"
#include "pmean/adversaries.hpp"
#include "pmean/allocators.hpp"
#include "pmean/certificates.hpp"
#include "pmean/io.hpp"
#include "pmean/offline.hpp"
#include "pmean/welfare.hpp"

namespace pmean::harness {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

/// SHA-256 of the compact instance JSON.
inline std::string instance_hash(const Instance& inst) { return sha256_hex(io::instance_to_json(inst).dump()); }

struct Regime {
  std::string label;
  double bound = 0.0;
};

/// Competitive-ratio regime for (n, p) with explicit constants.
inline Regime regime_for(std::size_t n, const PMeanParam& p) {
  const double nn = static_cast<double>(n), l1 = std::log(nn + 1.0);
  const double ln = std::log(nn);
  const double edge = ln > 0.0 ? 1.0 / ln : std::numeric_limits<double>::infinity();
  if (p.positive()) {
    if (p.value() >= edge) return {"1/p", 1.0 / p.value()};
    return {"log n", l1 + 1.0};
  }
  if (p.is_nash()) return {"log n", l1};
  if (p.is_finite() && p.magnitude() <= edge) return {"log n", nashian_ratio_bound(n, p)};
  if (p.is_finite() && p.magnitude() <= 1.0) {
    const double q = p.magnitude();
    return {"n^(|p|/(|p|+1))",
            std::pow(q / (q + 1.0), -1.0 / q) * std::pow(nn, q / (q + 1.0)) * std::pow(l1, 1.0 / (q + 1.0))};
  }
  return {"sqrt(n)", mixed_ratio_bound(n, p)};
}

enum class Family { uniform, nashian, mixed, primal_dual };

inline Family family_of(std::string_view algo) {
  if (algo == "uniform") return Family::uniform;
  if (algo == "nashian") return Family::nashian;
  if (algo == "mixed") return Family::mixed;
  if (algo == "pd_greedy" || algo == "reg_pd") return Family::primal_dual;
  throw InvalidInput("unknown algorithm '" + std::string(algo) + "'");
}

struct RunConfig {
  std::string algo = "nashian";
  Granularity granularity = Granularity::waterfill;
  BaseMode base = BaseMode::relaxed;
  double uniform_share = 0.5;
  PMeanParam p = PMeanParam::nash();
  std::vector<double> beta_grid = {1e-4, 1e-3, 1e-2, 1e-1};
  double tolerance = 1e-9;
  double solver_tol = 1e-7;
  std::size_t solver_max_iters = 5000;
  bool record_snapshots = false;
};

inline std::string_view to_string(BaseMode m) { return m == BaseMode::relaxed ? "assumed" : "physical"; }

inline BaseMode parse_base_mode(std::string_view s) {
  if (s == "assumed" || s == "relaxed") return BaseMode::relaxed;
  if (s == "physical") return BaseMode::physical;
  throw InvalidInput("unknown --relaxed mode '" + std::string(s) + "'");
}

/// pd_greedy and uniform always start from zero utilities without the uniform part.
inline bool zero_base(const RunConfig& c) { return c.algo == "pd_greedy" || c.algo == "uniform"; }
inline bool composed(const RunConfig& c) { return c.base == BaseMode::physical && !zero_base(c); }
inline BaseMode effective_mode(const RunConfig& c) { return zero_base(c) ? BaseMode::physical : c.base; }

inline void check_config(const RunConfig& c) {
  if (family_of(c.algo) == Family::primal_dual && !(c.p.is_finite() && c.p.positive()))
    throw ConfigError(c.algo + " needs 0 < p <= 1, got p = " + c.p.to_string());
  if (composed(c) && !(c.uniform_share >= 0.0 && c.uniform_share <= 1.0))
    throw ConfigError("uniform share must lie in [0, 1]");
}

/// The allocator a configuration runs, wrapped with the uniform part when physical.
inline std::unique_ptr<OnlineAllocator> make_runner(const RunConfig& c) {
  check_config(c);
  auto alg = make_allocator(c.algo, c.granularity, c.p);
  if (composed(c)) alg = compose_with_uniform(std::move(alg), c.uniform_share);
  return alg;
}

/// Offline quantities a suite compares against.
struct OptSummary {
  double value = 0.0;
  double gap = 0.0;
  const Allocation* allocation = nullptr;
};

namespace detail {

/// Keeps the report with the smallest margin; margin < 0 means a violation.
inline void keep_worst(std::optional<CertificateReport>& slot, double& slot_margin, CertificateReport r,
                       double margin, std::size_t t) {
  if (!slot || margin < slot_margin) {
    r.worst_index = t;
    slot = std::move(r);
    slot_margin = margin;
  }
}

}  // namespace detail

/// Certificate suite for one run. observe() is called for t = 0..m with the
/// state before item t (t = m: final state); finish() emits the rows.
class SuiteAccumulator {
 public:
  SuiteAccumulator(const Instance& inst, const RunConfig& cfg, OptSummary opt, std::vector<double> base)
      : inst_(inst), cfg_(cfg), opt_(opt), base_(std::move(base)), n_(inst.agents()), K_(inst.monopolist_ratio()) {
    const Family f = family_of(cfg.algo);
    const bool relaxed = cfg.base == BaseMode::relaxed && !zero_base(cfg);
    track_lemma_ = f == Family::nashian && relaxed;
    track_critical_ = f == Family::mixed && relaxed && cfg.p.negative();
    if (track_lemma_) {
      ref_opt_.assign(n_, 0.0);
      ref_unif_.assign(n_, 0.0);
    }
    crit_.resize(cfg.beta_grid.size());
    crit_margin_.assign(cfg.beta_grid.size(), 0.0);
  }

  void observe(std::size_t t, std::span<const double> u, std::span<const double> remaining,
               std::optional<double> phi) {
    if (track_lemma_) observe_lemma(t, u);
    if (track_critical_) {
      if (!phi) throw InvalidInput("mixed state lacks phi");
      for (std::size_t k = 0; k < cfg_.beta_grid.size(); ++k) {
        auto r = count_critical_agents(u, remaining, *phi, cfg_.beta_grid[k], opt_.value, cfg_.p);
        const double m = r.bound - r.measured;
        detail::keep_worst(crit_[k], crit_margin_[k], std::move(r), m, t);
      }
      auto b = beta_star_critical_check(u, remaining, *phi, opt_.value, cfg_.p);
      detail::keep_worst(star_, star_margin_, b, b.bound - b.measured, t);
      auto f = regularized_floor_check(u, remaining, *phi, opt_.value, cfg_.p, K_);
      detail::keep_worst(floor_, floor_margin_, f, f.measured - f.bound, t);
    }
  }

  std::vector<CertificateReport> finish(const AllocatorState& fin, const Allocation& x) {
    std::vector<CertificateReport> rows;
    const double tol = cfg_.tolerance;
    double worst_col = 0.0;
    std::optional<std::size_t> worst_item;
    for (std::size_t i = 0; i < x.items(); ++i)
      if (x.column_sum(i) > worst_col) {
        worst_col = x.column_sum(i);
        worst_item = i;
      }
    rows.push_back({"allocation_feasible", worst_col <= 1.0 + tol, worst_col, 1.0, 1.0, worst_item, tol});

    const Family f = family_of(cfg_.algo);
    const double alg = p_mean_welfare(fin.u, cfg_.p);
    const double ratio_upper = alg > 0.0 ? (opt_.value + opt_.gap) / alg : std::numeric_limits<double>::infinity();
    const double factor = composed(cfg_) ? 2.0 : 1.0;
    const double l1 = std::log(static_cast<double>(n_) + 1.0);

    if (track_lemma_) {
      const char* names[] = {"fundamental_lemma[opt]", "fundamental_lemma[uniform]", "fundamental_lemma[self]"};
      for (int k = 0; k < 3; ++k)
        rows.push_back({names[k], !(lemma_worst_[k] > l1 + tol), lemma_worst_[k], l1, l1, lemma_t_[k], tol});
      const auto opt_u = opt_.allocation ? utilities_of(inst_, *opt_.allocation) : std::vector<double>(n_, 0.0);
      for (double beta : cfg_.beta_grid) {
        if (cfg_.p.negative()) {
          rows.push_back(count_bad_agents(fin.u, beta, opt_.value, cfg_.p));
        }
        if (opt_.allocation) {
          auto r = bad_agents_optimal_utility_check(fin.u, opt_u, beta * opt_.value);
          r.beta = beta;
          rows.push_back(std::move(r));
        }
      }
    }
    if (track_critical_) {
      for (auto& c : crit_)
        if (c) rows.push_back(*c);
      if (star_) rows.push_back(*star_);
      if (floor_) rows.push_back(*floor_);
      auto uf = utility_floor_check(fin.u, opt_.value, cfg_.p, K_);
      rows.push_back(uf);
    }

    auto ratio_row = [&](std::string name, double bound) {
      rows.push_back({std::move(name), ratio_upper <= bound * (1.0 + tol), ratio_upper, bound, bound, std::nullopt,
                      tol});
    };
    if (f == Family::nashian && (cfg_.p.is_nash() || (cfg_.p.is_finite() && cfg_.p.negative() &&
                                                      cfg_.p.magnitude() <= 1.0)))
      ratio_row("nashian_ratio", factor * nashian_ratio_bound(n_, cfg_.p, K_));
    if (f == Family::mixed && cfg_.p.negative() && (cfg_.p.is_neg_infinity() || cfg_.p.magnitude() >= 1.0))
      ratio_row("mixed_ratio", factor * mixed_ratio_bound(n_, cfg_.p, K_));

    if (f == Family::primal_dual) {
      const double p = cfg_.p.value();
      const double Gamma = cfg_.algo == "pd_greedy" ? 1.0 / p : l1 + 1.0;
      if (!composed(cfg_)) {
        DualAssignment d{fin.alphas, fin.gammas, cfg_.p};
        rows.push_back(check_dual_feasibility(inst_, d, tol));
        const double P = primal_objective(fin.u, p), D = dual_objective(d);
        rows.push_back(check_pd_ratio(P, D, Gamma, p, tol * std::max(1.0, D)));
        const double dual_bound = std::pow(p / static_cast<double>(n_) * D, 1.0 / p);
        rows.push_back({"weak_duality", opt_.value <= dual_bound + opt_.gap + tol, opt_.value, dual_bound + opt_.gap,
                        dual_bound + opt_.gap, std::nullopt, tol});
      }
      ratio_row("pd_ratio_competitive", factor * Gamma);
    }
    return rows;
  }

 private:
  void observe_lemma(std::size_t t, std::span<const double> u) {
    const double inv_n = 1.0 / static_cast<double>(n_);
    double s[3] = {0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < n_; ++a) {
      if (ref_opt_[a] > 0.0) s[0] += ref_opt_[a] / u[a];
      if (ref_unif_[a] > 0.0) s[1] += ref_unif_[a] / u[a];
      const double own = u[a] - base_[a];
      if (own > 0.0) s[2] += own / u[a];
    }
    for (int k = 0; k < 3; ++k) {
      s[k] *= inv_n;
      if (s[k] > lemma_worst_[k]) {
        lemma_worst_[k] = s[k];
        lemma_t_[k] = t;
      }
    }
    if (t < inst_.size()) {
      const auto& v = inst_.item(t).values;
      if (opt_.allocation)
        for (const auto& sh : opt_.allocation->column(t)) ref_opt_[sh.agent] += v[sh.agent] * sh.fraction;
      for (std::size_t a = 0; a < n_; ++a) ref_unif_[a] += v[a] * inv_n;
    }
  }

  const Instance& inst_;
  RunConfig cfg_;
  OptSummary opt_;
  std::vector<double> base_;
  std::size_t n_;
  double K_;
  bool track_lemma_ = false, track_critical_ = false;
  std::vector<double> ref_opt_, ref_unif_;
  double lemma_worst_[3] = {0.0, 0.0, 0.0};
  std::size_t lemma_t_[3] = {0, 0, 0};
  std::vector<std::optional<CertificateReport>> crit_;
  std::vector<double> crit_margin_;
  std::optional<CertificateReport> star_, floor_;
  double star_margin_ = 0.0, floor_margin_ = 0.0;
};

struct RunReport {
  std::string instance_hash;
  std::size_t n = 0, m = 0;
  std::string algo;
  Granularity granularity = Granularity::waterfill;
  BaseMode base = BaseMode::relaxed;
  double uniform_share = 0.5;
  PMeanParam p = PMeanParam::nash();
  double K = 1.0;
  double alg = 0.0;
  double opt = 0.0;
  double gap = 0.0;
  std::size_t solver_iterations = 0;
  Regime regime;
  std::vector<CertificateReport> certificates;
  std::vector<std::string> warnings;
  double wall_time_s = 0.0;

  /// OPT / ALG with the solver's lower estimate; infinite when ALG = 0.
  double ratio() const { return alg > 0.0 ? opt / alg : std::numeric_limits<double>::infinity(); }
  /// Same with the certified upper estimate of OPT.
  double ratio_upper() const { return alg > 0.0 ? (opt + gap) / alg : std::numeric_limits<double>::infinity(); }
  bool certificates_pass() const {
    return std::all_of(certificates.begin(), certificates.end(), [](const auto& c) { return c.pass; });
  }
};

inline json to_json(const CertificateReport& c) {
  json j{{"name", c.name},         {"pass", c.pass},           {"measured", c.measured},
         {"bound", c.bound},       {"bound_unclipped", c.bound_unclipped}, {"tolerance", c.tolerance}};
  j["worst_index"] = c.worst_index ? json(*c.worst_index) : json(nullptr);
  j["beta"] = c.beta ? json(*c.beta) : json(nullptr);
  return j;
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const RunReport& r, bool with_wall_time = true) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["instance_hash"] = r.instance_hash;
  j["n"] = r.n;
  j["m"] = r.m;
  j["algo"] = r.algo;
  j["granularity"] = std::string(to_string(r.granularity));
  j["relaxed"] = std::string(to_string(r.base));
  if (r.base == BaseMode::physical) j["uniform_share"] = r.uniform_share;
  j["p"] = r.p.to_string();
  j["K"] = r.K;
  j["alg"] = r.alg;
  j["opt"] = r.opt;
  j["certified_gap"] = r.gap;
  j["solver_iterations"] = r.solver_iterations;
  j["ratio"] = finite_or_null(r.ratio());
  j["ratio_upper"] = finite_or_null(r.ratio_upper());
  j["regime_label"] = r.regime.label;
  j["regime_bound"] = r.regime.bound;
  json certs = json::array();
  for (const auto& c : r.certificates) certs.push_back(to_json(c));
  j["certificates"] = std::move(certs);
  j["certificates_pass"] = r.certificates_pass();
  j["warnings"] = r.warnings;
  if (with_wall_time) j["wall_time_s"] = r.wall_time_s;
  return j;
}

struct Evaluation {
  RunReport report;
  RunTrace trace;
  SolveResult opt;
};

/// Runs the configured allocator on `inst`, solves the offline optimum
/// (unless `known_opt` is given) and evaluates the certificate suite.
inline Evaluation evaluate(const Instance& inst, const RunConfig& cfg, std::optional<SolveResult> known_opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  auto alg = make_runner(cfg);
  Evaluation ev;
  ev.opt = known_opt ? std::move(*known_opt) : solve_opt(inst, cfg.p, cfg.solver_tol, cfg.solver_max_iters);

  const BaseMode mode = effective_mode(cfg);
  std::vector<double> base = mode == BaseMode::relaxed ? relaxed_base(inst) : std::vector<double>(inst.agents(), 0.0);
  SuiteAccumulator suite(inst, cfg, {ev.opt.opt_value, ev.opt.certified_gap, &ev.opt.allocation}, base);
  RunOptions opts;
  opts.record_snapshots = cfg.record_snapshots;
  opts.observer = [&](std::size_t t, const AllocatorState& s) { suite.observe(t, s.u, s.remaining, s.phi); };
  ev.trace = run_online(*alg, inst, mode, opts);

  auto& r = ev.report;
  r.instance_hash = instance_hash(inst);
  r.n = inst.agents();
  r.m = inst.size();
  r.algo = cfg.algo;
  r.granularity = cfg.granularity;
  r.base = cfg.base;
  r.uniform_share = cfg.uniform_share;
  r.p = cfg.p;
  r.K = inst.monopolist_ratio();
  r.alg = p_mean_welfare(ev.trace.final_state.u, cfg.p);
  r.opt = ev.opt.opt_value;
  r.gap = ev.opt.certified_gap;
  r.solver_iterations = ev.opt.iterations;
  r.regime = regime_for(inst.agents(), cfg.p);
  r.certificates = suite.finish(ev.trace.final_state, ev.trace.allocation);
  if (zero_base(cfg) && cfg.base == BaseMode::relaxed) r.warnings.push_back(cfg.algo + " runs from zero base");
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return ev;
}

struct AdversarySpec {
  std::string family = "negative";  // negative | positive
  std::size_t n = 256;
  PMeanParam p = PMeanParam::finite(-1.0);
  std::optional<int> L;
  double alpha = 0.0;
  std::optional<std::size_t> M;
};

/// Default number of rounds for the negative construction: ceil(log n).
inline int default_rounds(std::size_t n) {
  return std::max(1, static_cast<int>(std::ceil(std::log(static_cast<double>(n)))));
}

/// Plays the adversary against the configured opponent.
inline AdversarialRun play_adversary(const AdversarySpec& spec, const RunConfig& cfg) {
  auto alg = make_runner(cfg);
  const BaseMode mode = effective_mode(cfg);
  if (spec.family == "negative") {
    if (!spec.p.is_finite() || !spec.p.negative())
      throw ConfigError("the negative construction needs a finite p < 0, got " + spec.p.to_string());
    auto c = NegativeAdversaryConfig::make(spec.n, spec.p.value(), spec.L.value_or(default_rounds(spec.n)), spec.alpha);
    return run_negative_adversary(c, *alg, mode);
  }
  if (spec.family == "positive") {
    if (!spec.p.is_finite() || !spec.p.positive())
      throw ConfigError("the positive construction needs 0 < p <= 1, got " + spec.p.to_string());
    auto c = PositiveAdversaryConfig::make(spec.n, spec.p.value(), spec.M);
    return run_positive_adversary(c, *alg, mode);
  }
  throw InvalidInput("unknown adversary family '" + spec.family + "'");
}

struct SweepSpec {
  std::vector<std::string> p_grid;
  std::vector<std::size_t> n_grid;
  std::vector<std::string> algos;
  std::string source = "identity";  // identity | random | negative | positive
  std::size_t instances = 1;        // random instances per (n, p, algo) cell
  std::size_t items = 0;            // random: items per instance, 0 means 2n
  std::uint64_t seed = 1;
  Granularity granularity = Granularity::waterfill;
  BaseMode base = BaseMode::relaxed;
  double uniform_share = 0.5;
};

struct SweepRow {
  std::size_t n = 0;
  std::string p;
  std::string algo;
  std::size_t instance = 0;
  std::optional<RunReport> report;
  std::string error;

  bool operator<(const SweepRow& o) const {
    return std::tie(n, p, algo, instance) < std::tie(o.n, o.p, o.algo, o.instance);
  }
};

/// Worker count: PMEAN_ARENA_THREADS if set, else the hardware concurrency, capped by `jobs`.
inline std::size_t worker_count(std::size_t jobs) {
  std::size_t w = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PMEAN_ARENA_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) w = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(w, jobs));
}

inline void check_sweep(const SweepSpec& s) {
  if (s.p_grid.empty() || s.n_grid.empty() || s.algos.empty()) throw InvalidInput("sweep grids must be non-empty");
  if (s.source != "identity" && s.source != "random" && s.source != "negative" && s.source != "positive")
    throw InvalidInput("unknown sweep source '" + s.source + "'");
  if (s.instances == 0) throw InvalidInput("sweep needs at least one instance per cell");
  for (const auto& p : s.p_grid) PMeanParam::parse(p);
  for (const auto& a : s.algos) family_of(a);
}

inline std::uint64_t cell_seed(std::uint64_t seed, std::size_t n, std::size_t instance) {
  return seed * 1000003ULL + static_cast<std::uint64_t>(n) * 1009ULL + instance;
}

inline SweepRow sweep_one(const SweepSpec& spec, SweepRow row) {
  try {
    RunConfig cfg;
    cfg.algo = row.algo;
    cfg.granularity = spec.granularity;
    cfg.base = spec.base;
    cfg.uniform_share = spec.uniform_share;
    cfg.p = PMeanParam::parse(row.p);
    if (spec.source == "identity") {
      row.report = evaluate(identity_instance(row.n), cfg).report;
    } else if (spec.source == "random") {
      const std::size_t m = spec.items ? spec.items : 2 * row.n;
      row.report = evaluate(random_instance(row.n, m, cell_seed(spec.seed, row.n, row.instance)), cfg).report;
    } else {
      AdversarySpec a;
      a.family = spec.source;
      a.n = row.n;
      a.p = cfg.p;
      auto run = play_adversary(a, cfg);
      auto ev = evaluate(run.instance, cfg);
      ev.report.warnings.insert(ev.report.warnings.end(), run.warnings.begin(), run.warnings.end());
      row.report = std::move(ev.report);
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

/// One row per (n, p, algo, instance); failures are recorded per row.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  check_sweep(spec);
  const std::size_t per_cell = spec.source == "random" ? spec.instances : 1;
  std::vector<SweepRow> rows;
  for (auto n : spec.n_grid)
    for (const auto& p : spec.p_grid)
      for (const auto& a : spec.algos)
        for (std::size_t k = 0; k < per_cell; ++k) rows.push_back({n, p, a, k, std::nullopt, {}});
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i; (i = next.fetch_add(1)) < rows.size();) rows[i] = sweep_one(spec, std::move(rows[i]));
  };
  const std::size_t workers = worker_count(rows.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  std::sort(rows.begin(), rows.end());
  return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "n,p,algo,instance,regime_label,regime_bound,alg,opt,certified_gap,ratio,ratio_upper,certificates_pass,"
         "error\n";
  auto num = [](double v) { return std::isfinite(v) ? io::format_double(v) : std::string("inf"); };
  for (const auto& r : rows) {
    out << r.n << ',' << r.p << ',' << r.algo << ',' << r.instance << ',';
    if (r.report) {
      const auto& x = *r.report;
      out << '"' << x.regime.label << "\"," << num(x.regime.bound) << ',' << num(x.alg) << ',' << num(x.opt) << ','
          << num(x.gap) << ',' << num(x.ratio()) << ',' << num(x.ratio_upper()) << ','
          << (x.certificates_pass() ? "true" : "false") << ',';
    } else {
      out << ",,,,,,,,";
    }
    std::string err = r.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    out << (err.empty() ? "" : "\"" + err + "\"") << '\n';
  }
}

inline json sweep_to_json(const std::vector<SweepRow>& rows, bool with_wall_time = true) {
  json arr = json::array();
  for (const auto& r : rows) {
    json j{{"n", r.n}, {"p", r.p}, {"algo", r.algo}, {"instance", r.instance}};
    j["report"] = r.report ? to_json(*r.report, with_wall_time) : json(nullptr);
    j["error"] = r.error.empty() ? json(nullptr) : json(r.error);
    arr.push_back(std::move(j));
  }
  return json{{"schema_version", kSchemaVersion}, {"rows", std::move(arr)}};
}

/// Columns: certificate,instance_id,t,beta,measured,bound,pass.
inline void write_certificates_csv(std::ostream& out, const std::vector<CertificateReport>& rows,
                                   const std::string& instance_id) {
  out << "certificate,instance_id,t,beta,measured,bound,pass\n";
  auto num = [](double v) { return std::isfinite(v) ? io::format_double(v) : std::string(v > 0 ? "inf" : "-inf"); };
  for (const auto& c : rows)
    out << c.name << ',' << instance_id << ',' << (c.worst_index ? std::to_string(*c.worst_index) : "") << ','
        << (c.beta ? num(*c.beta) : "") << ',' << num(c.measured) << ',' << num(c.bound) << ','
        << (c.pass ? "true" : "false") << '\n';
}

/// Serialized run trace: configuration, final state, and optionally the
/// state before every item.
inline json trace_to_json(const RunTrace& tr, const RunConfig& cfg, const std::string& hash) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["instance_hash"] = hash;
  j["algo"] = cfg.algo;
  j["granularity"] = std::string(to_string(cfg.granularity));
  j["relaxed"] = std::string(to_string(cfg.base));
  j["uniform_share"] = cfg.uniform_share;
  j["p"] = cfg.p.to_string();
  j["base"] = tr.base;
  const auto& f = tr.final_state;
  j["final"] = json{{"u", f.u}, {"remaining", f.remaining}, {"gammas", f.gammas}, {"alphas", f.alphas}};
  j["final"]["phi"] = f.phi ? json(*f.phi) : json(nullptr);
  if (tr.snapshots.size() == tr.allocation.items()) {
    json s = json::array();
    for (const auto& x : tr.snapshots) s.push_back(json{{"u", x.u}, {"remaining", x.remaining}});
    j["snapshots"] = std::move(s);
  } else {
    j["snapshots"] = nullptr;
  }
  return j;
}

/// Artifacts read back by the certify command.
struct TraceArtifact {
  RunConfig cfg;
  std::string instance_hash;
  std::vector<double> base;
  AllocatorState final_state;
  std::optional<std::vector<Snapshot>> snapshots;
};

inline TraceArtifact trace_from_json(const json& j) {
  try {
    TraceArtifact t;
    t.cfg.algo = j.at("algo").get<std::string>();
    family_of(t.cfg.algo);
    t.cfg.granularity = parse_granularity(j.at("granularity").get<std::string>());
    t.cfg.base = parse_base_mode(j.at("relaxed").get<std::string>());
    t.cfg.uniform_share = j.at("uniform_share").get<double>();
    t.cfg.p = PMeanParam::parse(j.at("p").get<std::string>());
    t.instance_hash = j.at("instance_hash").get<std::string>();
    t.base = j.at("base").get<std::vector<double>>();
    const auto& f = j.at("final");
    t.final_state.u = f.at("u").get<std::vector<double>>();
    t.final_state.n = t.final_state.u.size();
    t.final_state.remaining = f.at("remaining").get<std::vector<double>>();
    t.final_state.gammas = f.at("gammas").get<std::vector<double>>();
    t.final_state.alphas = f.at("alphas").get<std::vector<double>>();
    if (!f.at("phi").is_null()) t.final_state.phi = f.at("phi").get<double>();
    if (t.cfg.p.is_finite() && t.cfg.p.positive()) t.final_state.p = t.cfg.p;
    if (!j.at("snapshots").is_null()) {
      std::vector<Snapshot> s;
      for (const auto& x : j.at("snapshots"))
        s.push_back({x.at("u").get<std::vector<double>>(), x.at("remaining").get<std::vector<double>>()});
      t.snapshots = std::move(s);
    }
    return t;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed trace JSON: ") + e.what());
  }
}

/// Re-evaluates the certificate suite from stored artifacts.
inline std::vector<CertificateReport> certify_artifacts(const Instance& inst, const Allocation& x,
                                                        const TraceArtifact& tr, double opt_value, double opt_gap,
                                                        const Allocation& opt_allocation) {
  const std::size_t n = inst.agents(), m = inst.size();
  if (tr.instance_hash != instance_hash(inst)) throw InvalidInput("trace was recorded on a different instance");
  if (tr.final_state.n != n || tr.base.size() != n || tr.final_state.remaining.size() != n)
    throw InvalidInput("trace dimensions do not match the instance");
  if (x.agents() != n || x.items() != m || opt_allocation.agents() != n || opt_allocation.items() != m)
    throw InvalidInput("allocation dimensions do not match the instance");
  if (family_of(tr.cfg.algo) == Family::primal_dual &&
      (tr.final_state.alphas.size() != m || tr.final_state.gammas.size() != n))
    throw InvalidInput("trace lacks a dual assignment of the right size");
  const auto u = utilities_of(inst, x, tr.base);
  for (std::size_t a = 0; a < n; ++a)
    if (std::fabs(u[a] - tr.final_state.u[a]) > 1e-9 * std::max(1.0, std::fabs(u[a])))
      throw InvalidInput("trace utilities do not match the allocation for agent " + std::to_string(a));
  const bool needs_snapshots = (family_of(tr.cfg.algo) == Family::nashian || family_of(tr.cfg.algo) == Family::mixed) &&
                               tr.cfg.base == BaseMode::relaxed;
  if (needs_snapshots && (!tr.snapshots || tr.snapshots->size() != m))
    throw InvalidInput("trace lacks the per-item snapshots this algorithm's certificates need");
  SuiteAccumulator suite(inst, tr.cfg, {opt_value, opt_gap, &opt_allocation}, tr.base);
  if (tr.snapshots && tr.snapshots->size() == m)
    for (std::size_t t = 0; t < m; ++t) suite.observe(t, (*tr.snapshots)[t].u, (*tr.snapshots)[t].remaining, tr.final_state.phi);
  suite.observe(m, tr.final_state.u, tr.final_state.remaining, tr.final_state.phi);
  return suite.finish(tr.final_state, x);
}

}  // namespace pmean::harness

#endif  // PMEAN_HARNESS_HPP
