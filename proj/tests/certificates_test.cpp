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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "pmean/adversaries.hpp"
#include "pmean/allocators.hpp"
#include "pmean/certificates.hpp"

namespace pmean {
namespace {

using V = std::vector<double>;

TEST(PrimalObjective, Examples) {
  EXPECT_DOUBLE_EQ(primal_objective(V{1.0, 1.0}, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(primal_objective(V{0.0, 0.0}, 0.3), 0.0);
  EXPECT_NEAR(primal_objective(V{0.25, 1.0}, 0.5), 3.0, 1e-15);
  EXPECT_THROW(primal_objective(V{1.0}, -1.0), ConfigError);
}

TEST(DualObjective, Examples) {
  EXPECT_DOUBLE_EQ(dual_objective({{}, {0.0, 0.0}, PMeanParam::finite(0.5)}), 0.0);
  EXPECT_DOUBLE_EQ(dual_objective({{0.25, 0.5}, {3.0, 7.0}, PMeanParam::finite(1.0)}), 0.75);
  const double d = dual_objective({{1.41421}, {2.0, 2.0}, PMeanParam::finite(0.5)});
  EXPECT_NEAR(d, 1.41421 + 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(d, 4.2426, 1e-4);
  EXPECT_THROW(dual_objective({{}, {}, PMeanParam::nash()}), ConfigError);
}

TEST(DualFeasibility, LinearCase) {
  const Instance inst(2, {Item{{0.4, 0.7}}, Item{{0.6, 0.3}}});
  const DualAssignment ok{{0.7, 0.6}, {0.0, 0.0}, PMeanParam::finite(1.0)};
  EXPECT_TRUE(check_dual_feasibility(inst, ok, 1e-12).pass);
  const DualAssignment low{{0.7, 0.5}, {0.0, 0.0}, PMeanParam::finite(1.0)};
  const auto r = check_dual_feasibility(inst, low, 1e-12);
  EXPECT_FALSE(r.pass);
  ASSERT_TRUE(r.worst_index);
  EXPECT_EQ(*r.worst_index, 1u);
  EXPECT_NEAR(r.measured, 0.1, 1e-12);
}

TEST(DualFeasibility, ZeroGammaIsViolation) {
  const Instance inst(2, {Item{{1.0, 0.0}}, Item{{0.0, 1.0}}});
  const DualAssignment d{{10.0, 10.0}, {1.0, 0.0}, PMeanParam::finite(0.5)};
  const auto r = check_dual_feasibility(inst, d, 1e-9);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(*r.worst_index, 1u);
  EXPECT_TRUE(std::isinf(r.measured));
  const DualAssignment wrong{{1.0}, {1.0, 1.0}, PMeanParam::finite(0.5)};
  EXPECT_THROW(check_dual_feasibility(inst, wrong, 1e-9), InvalidInput);
}

TEST(PdRatio, Examples) {
  const auto eq = check_pd_ratio(2.0, 2.0, 1.0, 0.5, 0.0);
  EXPECT_TRUE(eq.pass);
  EXPECT_EQ(eq.bound, eq.measured);
  EXPECT_FALSE(check_pd_ratio(1.0, 2.0, 1.0, 0.5, 1e-9).pass);
}

DualAssignment duals_of(const AllocatorState& s, double p) { return {s.alphas, s.gammas, PMeanParam::finite(p)}; }

TEST(PdRatio, GreedyWaterfillHoldsWithEquality) {
  for (double p : {0.1, 0.25, 0.5, 1.0}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto inst = random_instance(5, 12, seed);
      PdGreedyAllocator alg(PMeanParam::finite(p), Granularity::waterfill);
      const auto tr = run_online(alg, inst, BaseMode::physical);
      const auto d = duals_of(tr.final_state, p);
      EXPECT_TRUE(check_dual_feasibility(inst, d, 1e-9).pass) << p;
      const double P = primal_objective(tr.final_state.u, p), D = dual_objective(d);
      EXPECT_NEAR(std::pow(1.0 / p, p) * P, D, 1e-6 * std::max(1.0, D)) << p;
    }
  }
}

TEST(PdRatio, RegularizedOnIdentity) {
  RegularizedPdAllocator alg(PMeanParam::finite(0.5), Granularity::waterfill);
  const auto inst = identity_instance(2);
  const auto tr = run_online(alg, inst, BaseMode::relaxed);
  const auto d = duals_of(tr.final_state, 0.5);
  EXPECT_TRUE(check_dual_feasibility(inst, d, 1e-9).pass);
  const double P = primal_objective(tr.final_state.u, 0.5), D = dual_objective(d);
  EXPECT_TRUE(check_pd_ratio(P, D, std::log(3.0) + 1.0, 0.5, 1e-9).pass);
}

TEST(PdRatio, AtomicGreedyCanViolateDualFeasibility) {
  std::size_t violations = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = random_instance(5, 12, seed);
    PdGreedyAllocator alg(PMeanParam::finite(0.5), Granularity::atomic);
    const auto tr = run_online(alg, inst, BaseMode::physical);
    if (!check_dual_feasibility(inst, duals_of(tr.final_state, 0.5), 1e-9).pass) ++violations;
  }
  EXPECT_GT(violations, 0u);
}

TEST(FundamentalLemma, SelfReferenceOnIdentity) {
  NashianAllocator alg(Granularity::atomic);
  const auto inst = identity_instance(2);
  const auto tr = run_online(alg, inst, BaseMode::relaxed);
  EXPECT_NEAR(fundamental_lemma_gap(tr, inst, tr.allocation, 2), 2.0 / 3.0, 1e-15);
  EXPECT_LE(fundamental_lemma_gap(tr, inst, tr.allocation, 2), std::log(3.0));
  EXPECT_EQ(fundamental_lemma_gap(tr, inst, Allocation(2, 2), 2), 0.0);
  EXPECT_THROW(fundamental_lemma_gap(tr, inst, tr.allocation, 3), InvalidInput);
  EXPECT_THROW(fundamental_lemma_gap(tr, inst, Allocation(3, 2), 1), InvalidInput);
}

TEST(FundamentalLemma, AtomicGreedyCanExceedBound) {
  const Instance inst(4, {Item{{0.0, 1.0, 1.0, 0.0}}, Item{{1.0, 0.0, 0.0, 1.0}}});
  Allocation ref(4, 2);
  ref.set(2, 0, 1.0);
  ref.set(3, 1, 1.0);
  NashianAllocator atomic(Granularity::atomic);
  const auto a = fundamental_lemma_profile(run_online(atomic, inst, BaseMode::relaxed), inst, ref);
  EXPECT_NEAR(a[2], 2.0, 1e-15);
  EXPECT_GT(a[2], std::log(5.0));
  NashianAllocator water(Granularity::waterfill);
  const auto w = fundamental_lemma_profile(run_online(water, inst, BaseMode::relaxed), inst, ref);
  EXPECT_NEAR(w[2], 2.0 / 3.0, 1e-12);
  EXPECT_LE(w[2], std::log(5.0));
}

TEST(FundamentalLemma, TrackerMatchesProfile) {
  const auto inst = random_instance(6, 20, 17);
  NashianAllocator alg;
  const auto tr = run_online(alg, inst, BaseMode::relaxed);
  UniformAllocator u;
  const auto ref = run_online(u, inst, BaseMode::physical).allocation;
  const auto profile = fundamental_lemma_profile(tr, inst, ref);
  FundamentalLemmaTracker tracker(inst, ref);
  for (std::size_t t = 0; t < inst.size(); ++t) EXPECT_EQ(tracker.observe(t, tr.snapshots[t].u), profile[t]);
  EXPECT_EQ(tracker.observe(inst.size(), tr.final_state.u), profile.back());
  EXPECT_LE(tracker.worst(), std::log(7.0));
  EXPECT_THROW(tracker.observe(0, tr.final_state.u), InvalidInput);
}

TEST(BadAgents, Extremes) {
  const V u{0.1, 0.2, 0.3};
  const auto all = count_bad_agents(u, 10.0, 1.0, PMeanParam::finite(-1.0));
  EXPECT_EQ(all.measured, 1.0);
  EXPECT_EQ(all.bound, 1.0);
  EXPECT_GT(all.bound_unclipped, 1.0);
  EXPECT_TRUE(all.pass);
  ASSERT_TRUE(all.beta);
  EXPECT_EQ(*all.beta, 10.0);
  const auto none = count_bad_agents(u, 1e-9, 1.0, PMeanParam::finite(-1.0));
  EXPECT_EQ(none.measured, 0.0);
  EXPECT_TRUE(none.pass);
}

TEST(BadAgents, BoundFormula) {
  const V u(8, 1.0);
  const auto r = count_bad_agents(u, 0.01, 1.0, PMeanParam::finite(-2.0));
  EXPECT_NEAR(r.bound, std::pow(0.01 * std::log(9.0), 2.0 / 3.0), 1e-15);
  const auto e = count_bad_agents(u, 0.01, 1.0, PMeanParam::neg_infinity());
  EXPECT_NEAR(e.bound, 0.01 * std::log(9.0), 1e-15);
}

TEST(BadAgents, OptimalUtilityCheck) {
  const V u{0.05, 0.5, 0.5, 0.5};
  const V opt{0.4, 0.2, 0.2, 0.2};
  const auto r = bad_agents_optimal_utility_check(u, opt, 0.1);
  EXPECT_NEAR(r.measured, 0.1, 1e-15);
  EXPECT_NEAR(r.bound, 0.1 * std::log(5.0), 1e-15);
  EXPECT_TRUE(r.pass);
  const auto f = bad_agents_optimal_utility_check(u, V{4.0, 0, 0, 0}, 0.1);
  EXPECT_FALSE(f.pass);
}

TEST(CriticalAgents, Examples) {
  const std::size_t n = 16;
  const V u(n, 1.0 / n), rem(n, 1.0);
  const double phi = mixed_phi(n);
  const auto p = PMeanParam::finite(-2.0);
  EXPECT_EQ(count_critical_agents(u, rem, phi, 0.0, 1.0, p).measured, 0.0);
  const auto star = beta_star_critical_check(u, rem, phi, 1.0, p);
  EXPECT_EQ(star.measured, 0.0);
  EXPECT_TRUE(star.pass);
  EXPECT_GT(1.0 / phi, beta_star(n, p));
}

TEST(CriticalAgents, BoundFormula) {
  const std::size_t n = 16;
  const V u(n, 0.0), rem(n, 0.0);
  const double phi = mixed_phi(n), beta = 0.01;
  const auto r = count_critical_agents(u, rem, phi, beta, 1.0, PMeanParam::finite(-2.0));
  const double first = std::pow(2.0 * beta * std::log(17.0), 2.0 / 3.0), second = std::pow(2.0 * phi * beta, 2.0);
  EXPECT_NEAR(r.bound_unclipped, std::max(first, second), 1e-15);
  EXPECT_EQ(r.measured, 1.0);
  EXPECT_FALSE(r.pass);
}

TEST(BetaStar, Values) {
  const std::size_t n = 64;
  const double l = std::log(65.0);
  EXPECT_NEAR(beta_star(n, PMeanParam::finite(-1.0)), 0.5 / 64.0, 1e-15);
  EXPECT_NEAR(beta_star(n, PMeanParam::finite(-2.0)), 0.5 * std::pow(64.0, -0.75) * std::pow(l, -0.25), 1e-15);
  EXPECT_NEAR(beta_star(n, PMeanParam::neg_infinity()), 0.5 / std::sqrt(64.0 * l), 1e-15);
  EXPECT_NEAR(beta_star(n, PMeanParam::neg_infinity()), 1.0 / (2.0 * mixed_phi(n)), 1e-15);
  EXPECT_THROW(beta_star(n, PMeanParam::nash()), ConfigError);
}

TEST(UtilityFloor, Examples) {
  EXPECT_TRUE(utility_floor_check(V{1.0}, 1.0, PMeanParam::finite(-1.0), 1.0).pass);
  MixedAllocator alg;
  const auto inst = identity_instance(4);
  const auto tr = run_online(alg, inst, BaseMode::relaxed);
  EXPECT_TRUE(utility_floor_check(tr.final_state.u, 1.0, PMeanParam::neg_infinity(), 1.0).pass);
  const auto f = utility_floor_check(V{0.0, 1.0}, 1.0, PMeanParam::finite(-1.0), 1.0);
  EXPECT_FALSE(f.pass);
  EXPECT_EQ(*f.worst_index, 0u);
  EXPECT_EQ(f.name, "utility_floor");
}

TEST(RatioBounds, Goldens) {
  EXPECT_NEAR(nashian_ratio_bound(1024, PMeanParam::finite(-0.1)), 27.732498364449632, 1e-12);
  EXPECT_NEAR(nashian_ratio_bound(1024, PMeanParam::nash()), 2.0 * std::log(1025.0), 1e-12);
  EXPECT_NEAR(mixed_ratio_bound(1024, PMeanParam::finite(-2.0)), 163.80440575130693, 1e-10);
  EXPECT_NEAR(mixed_ratio_bound(1024, PMeanParam::finite(-8.0)), 158.3323176319639, 1e-10);
  EXPECT_NEAR(mixed_ratio_bound(1024, PMeanParam::neg_infinity()), 168.50906967840335, 1e-10);
  EXPECT_NEAR(mixed_ratio_bound(1024, PMeanParam::finite(-1.0)), 238.30781172207091, 1e-10);
  EXPECT_GT(mixed_ratio_bound(1024, PMeanParam::finite(-2.0), 2.0), mixed_ratio_bound(1024, PMeanParam::finite(-2.0)));
}

}  // namespace
}  // namespace pmean
