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

// pmean_arena: run online allocators, offline optima, adversaries and
// certificate suites from the command line.
//
// Exit codes: 0 success, 1 a certificate or validation check failed,
// 2 usage or input error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pmean/pmean.hpp"

namespace fs = std::filesystem;
using namespace pmean;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

// Snapshots are written to trace.json only below this many (agent, item) pairs.
constexpr std::size_t kSnapshotCells = 4'000'000;

struct Common {
  std::string p = "nash";
  std::string algo = "nashian";
  std::string granularity = "waterfill";
  std::string relaxed = "assumed";
  double uniform_share = 0.5;
  std::string out;
  std::string format = "json";
};

void add_common(CLI::App* c, Common& o) {
  c->add_option("--p", o.p, "p-mean exponent: a number in [-inf, 1], 'nash' or '-inf'");
  c->add_option("--algo", o.algo, "uniform | nashian | mixed | pd_greedy | reg_pd");
  c->add_option("--granularity", o.granularity, "atomic | waterfill")->check(CLI::IsMember({"atomic", "waterfill"}));
  c->add_option("--relaxed", o.relaxed, "assumed | physical")->check(CLI::IsMember({"assumed", "physical"}));
  c->add_option("--uniform-share", o.uniform_share, "uniform share when --relaxed=physical");
  c->add_option("--out", o.out, "output directory (run, opt, adversary) or file (sweep, certify)");
  c->add_option("--format", o.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
}

harness::RunConfig to_config(const Common& o) {
  harness::RunConfig c;
  c.algo = o.algo;
  harness::family_of(c.algo);
  c.granularity = parse_granularity(o.granularity);
  c.base = harness::parse_base_mode(o.relaxed);
  c.uniform_share = o.uniform_share;
  c.p = PMeanParam::parse(o.p);
  return c;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string tok; std::getline(in, tok, ',');)
    if (!tok.empty()) out.push_back(tok);
  return out;
}

fs::path out_dir(const std::string& out) {
  fs::path d = out.empty() ? fs::path(".") : fs::path(out);
  fs::create_directories(d);
  return d;
}

json opt_to_json(const SolveResult& r, const PMeanParam& p) {
  return json{{"p", p.to_string()},
              {"opt_value", r.opt_value},
              {"certified_gap", r.certified_gap},
              {"iterations", r.iterations}};
}

void emit_report(const harness::RunReport& r, const std::string& format) {
  if (format == "csv") harness::write_certificates_csv(std::cout, r.certificates, r.instance_hash);
  else std::cout << harness::to_json(r).dump(2) << '\n';
}

void write_run_artifacts(const fs::path& dir, const Instance& inst, const harness::Evaluation& ev,
                         const harness::RunConfig& cfg) {
  io::write_instance((dir / "instance.json").string(), inst);
  io::write_allocation_csv((dir / "allocation.csv").string(), ev.trace.allocation);
  io::write_json((dir / "trace.json").string(), harness::trace_to_json(ev.trace, cfg, ev.report.instance_hash));
  io::write_json((dir / "opt.json").string(), opt_to_json(ev.opt, cfg.p));
  io::write_allocation_csv((dir / "opt_allocation.csv").string(), ev.opt.allocation);
}

Instance load_or_generate(const std::string& path, const std::string& source, std::size_t n, std::size_t m,
                          std::uint64_t seed) {
  if (!path.empty()) return io::read_instance(path);
  if (n == 0) throw InvalidInput("give --instance PATH or --n N");
  if (source == "identity") return identity_instance(n);
  if (source == "random") return random_instance(n, m ? m : 2 * n, seed);
  throw InvalidInput("unknown instance source '" + source + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online p-mean welfare allocation arena"};
  app.require_subcommand(1);

  Common run_o;
  std::string run_instance, run_source = "identity";
  std::size_t run_n = 0, run_m = 0;
  std::uint64_t run_seed = 1;
  auto* run = app.add_subcommand("run", "run one allocator on an instance and certify it");
  add_common(run, run_o);
  run->add_option("--instance", run_instance, "instance JSON");
  run->add_option("--n", run_n, "agents for a generated instance");
  run->add_option("--m", run_m, "items for a random instance (default 2n)");
  run->add_option("--source", run_source, "identity | random")->check(CLI::IsMember({"identity", "random"}));
  run->add_option("--seed", run_seed, "seed for a random instance");

  Common sw_o;
  std::string sw_p = "nash", sw_n = "16", sw_algo = "nashian", sw_source = "identity";
  std::size_t sw_instances = 1, sw_m = 0;
  std::uint64_t sw_seed = 1;
  auto* sweep = app.add_subcommand("sweep", "run a grid of (n, p, algo) cells");
  add_common(sweep, sw_o);
  sweep->add_option("--n", sw_n, "comma-separated n grid");
  sweep->add_option("--source", sw_source, "identity | random | negative | positive")
      ->check(CLI::IsMember({"identity", "random", "negative", "positive"}));
  sweep->add_option("--instances", sw_instances, "random instances per cell");
  sweep->add_option("--m", sw_m, "items per random instance (default 2n)");
  sweep->add_option("--seed", sw_seed, "base seed");
  sweep->get_option("--p")->description("comma-separated p grid");
  sweep->get_option("--algo")->description("comma-separated algorithm list");

  Common opt_o;
  std::string opt_instance;
  double opt_tol = 1e-7;
  std::size_t opt_iters = 5000;
  auto* opt = app.add_subcommand("opt", "solve the offline optimum of an instance");
  add_common(opt, opt_o);
  opt->add_option("--instance", opt_instance, "instance JSON")->required();
  opt->add_option("--tol", opt_tol, "relative Frank-Wolfe gap tolerance");
  opt->add_option("--max-iters", opt_iters, "iteration cap");

  Common adv_o;
  std::string adv_family = "negative";
  std::size_t adv_n = 256, adv_M = 0;
  int adv_L = 0;
  double adv_alpha = 0.0;
  auto* adv = app.add_subcommand("adversary", "play an adaptive construction against an opponent");
  add_common(adv, adv_o);
  adv->add_option("--family", adv_family, "negative | positive")->check(CLI::IsMember({"negative", "positive"}));
  adv->add_option("--n", adv_n, "agents");
  adv->add_option("--L", adv_L, "rounds of the negative construction (default ceil(log n))");
  adv->add_option("--alpha", adv_alpha, "slack of the negative construction, 0 <= alpha < |p|");
  adv->add_option("--M", adv_M, "subset size of the positive construction (default derived)");
  adv->add_option("--opponent", adv_o.algo, "opponent algorithm");

  std::string cert_dir, cert_out, cert_format = "csv";
  auto* cert = app.add_subcommand("certify", "re-run the certificate suite on stored run artifacts");
  cert->add_option("--dir", cert_dir, "directory written by run or adversary")->required();
  cert->add_option("--out", cert_out, "certificate table path (default stdout)");
  cert->add_option("--format", cert_format, "json | csv")->check(CLI::IsMember({"json", "csv"}));

  std::string val_instance;
  double val_tol = 1e-9;
  auto* val = app.add_subcommand("validate", "check monopolist sums and non-negativity");
  val->add_option("--instance", val_instance, "instance JSON")->required();
  val->add_option("--tol", val_tol, "allowed deviation of monopolist sums");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*run) {
      auto cfg = to_config(run_o);
      const auto inst = load_or_generate(run_instance, run_source, run_n, run_m, run_seed);
      cfg.record_snapshots = inst.agents() * inst.size() <= kSnapshotCells;
      const auto ev = harness::evaluate(inst, cfg);
      write_run_artifacts(out_dir(run_o.out), inst, ev, cfg);
      io::write_json((out_dir(run_o.out) / "report.json").string(), harness::to_json(ev.report));
      emit_report(ev.report, run_o.format);
      return ev.report.certificates_pass() ? kOk : kCheckFailed;
    }
    if (*sweep) {
      harness::SweepSpec spec;
      spec.p_grid = split(sw_o.p);
      for (const auto& s : split(sw_n)) spec.n_grid.push_back(std::stoul(s));
      spec.algos = split(sw_o.algo);
      spec.source = sw_source;
      spec.instances = sw_instances;
      spec.items = sw_m;
      spec.seed = sw_seed;
      spec.granularity = parse_granularity(sw_o.granularity);
      spec.base = harness::parse_base_mode(sw_o.relaxed);
      spec.uniform_share = sw_o.uniform_share;
      const auto rows = harness::run_sweep(spec);
      std::ostringstream text;
      if (sw_o.format == "csv") harness::write_sweep_csv(text, rows);
      else text << harness::sweep_to_json(rows).dump(2) << '\n';
      if (sw_o.out.empty()) {
        std::cout << text.str();
      } else {
        std::ofstream f(sw_o.out);
        if (!f) throw InvalidInput("cannot write '" + sw_o.out + "'");
        f << text.str();
      }
      bool ok = true;
      for (const auto& r : rows) {
        if (!r.error.empty()) {
          std::cerr << "row n=" << r.n << " p=" << r.p << " algo=" << r.algo << ": " << r.error << '\n';
          ok = false;
        }
        if (r.report && !r.report->certificates_pass()) ok = false;
      }
      return ok ? kOk : kCheckFailed;
    }
    if (*opt) {
      const auto p = PMeanParam::parse(opt_o.p);
      const auto inst = io::read_instance(opt_instance);
      const auto r = solve_opt(inst, p, opt_tol, opt_iters);
      const auto dir = out_dir(opt_o.out);
      io::write_json((dir / "opt.json").string(), opt_to_json(r, p));
      io::write_allocation_csv((dir / "opt_allocation.csv").string(), r.allocation);
      std::cout << opt_to_json(r, p).dump(2) << '\n';
      return kOk;
    }
    if (*adv) {
      auto cfg = to_config(adv_o);
      harness::AdversarySpec spec;
      spec.family = adv_family;
      spec.n = adv_n;
      spec.p = cfg.p;
      if (adv_L > 0) spec.L = adv_L;
      spec.alpha = adv_alpha;
      if (adv_M > 0) spec.M = adv_M;
      auto played = harness::play_adversary(spec, cfg);
      for (const auto& w : played.warnings) std::cerr << "warning: " << w << '\n';
      cfg.record_snapshots = played.instance.agents() * played.instance.size() <= kSnapshotCells;
      auto ev = harness::evaluate(played.instance, cfg);
      ev.report.warnings.insert(ev.report.warnings.end(), played.warnings.begin(), played.warnings.end());
      const auto dir = out_dir(adv_o.out);
      write_run_artifacts(dir, played.instance, ev, cfg);
      json rep = harness::to_json(ev.report);
      std::vector<std::size_t> sizes;
      for (const auto& g : played.groups) sizes.push_back(g.size());
      rep["adversary"] = json{{"family", adv_family}, {"group_sizes", sizes},
                              {"alg_allocated", p_mean_welfare(played.utilities, cfg.p)}};
      io::write_json((dir / "report.json").string(), rep);
      if (adv_o.format == "csv") harness::write_certificates_csv(std::cout, ev.report.certificates, ev.report.instance_hash);
      else std::cout << rep.dump(2) << '\n';
      return ev.report.certificates_pass() ? kOk : kCheckFailed;
    }
    if (*cert) {
      const fs::path dir(cert_dir);
      const auto inst = io::read_instance((dir / "instance.json").string());
      const auto x = io::read_allocation_csv((dir / "allocation.csv").string(), inst.agents(), inst.size());
      std::ifstream tf(dir / "trace.json"), of(dir / "opt.json");
      if (!tf || !of) throw InvalidInput("missing trace.json or opt.json in '" + cert_dir + "'");
      json tj, oj;
      try {
        tf >> tj;
        of >> oj;
      } catch (const json::exception& e) {
        throw InvalidInput(std::string("cannot parse artifacts: ") + e.what());
      }
      const auto tr = harness::trace_from_json(tj);
      const auto xo = io::read_allocation_csv((dir / "opt_allocation.csv").string(), inst.agents(), inst.size());
      if (PMeanParam::parse(oj.at("p").get<std::string>()) != tr.cfg.p)
        throw InvalidInput("opt.json and trace.json disagree on p");
      const auto rows = harness::certify_artifacts(inst, x, tr, oj.at("opt_value").get<double>(),
                                                   oj.at("certified_gap").get<double>(), xo);
      std::ostringstream text;
      if (cert_format == "csv") {
        harness::write_certificates_csv(text, rows, harness::instance_hash(inst));
      } else {
        json arr = json::array();
        for (const auto& r : rows) arr.push_back(harness::to_json(r));
        text << arr.dump(2) << '\n';
      }
      if (cert_out.empty()) {
        std::cout << text.str();
      } else {
        std::ofstream f(cert_out);
        if (!f) throw InvalidInput("cannot write '" + cert_out + "'");
        f << text.str();
      }
      for (const auto& r : rows)
        if (!r.pass) return kCheckFailed;
      return kOk;
    }
    if (*val) {
      const auto inst = io::read_instance(val_instance);
      const auto r = validate_instance(inst, val_tol);
      json j{{"pass", r.pass},
             {"nonnegative", r.nonnegative},
             {"max_deviation", r.max_deviation},
             {"monopolist_ratio", r.monopolist_ratio}};
      j["worst_agent"] = r.worst_agent ? json(*r.worst_agent) : json(nullptr);
      std::cout << j.dump(2) << '\n';
      return r.pass ? kOk : kCheckFailed;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
