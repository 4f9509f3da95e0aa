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
#include <numeric>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "pmean/adversaries.hpp"
#include "pmean/io.hpp"

namespace pmean {
namespace {

using V = std::vector<double>;

TEST(SSequence, Examples) {
  const auto one = s_sequence(1, 0.0, -1.0);
  ASSERT_EQ(one.size(), 2u);
  EXPECT_DOUBLE_EQ(one[0], 1.0);
  EXPECT_NEAR(one[1], 2.0 / 3.0, 1e-15);
  const auto two = s_sequence(2, 0.0, -1.0);
  ASSERT_EQ(two.size(), 3u);
  EXPECT_NEAR(two[1], 0.8, 1e-15);
  EXPECT_NEAR(two[2], 0.6, 1e-15);
}

TEST(SSequence, RecurrenceAndMonotonicity) {
  for (double p : {-0.3, -1.0, -2.5})
    for (int L : {1, 3, 8})
      for (double alpha : {0.0, 0.1}) {
        if (alpha >= std::fabs(p)) continue;
        const auto s = s_sequence(L, alpha, p);
        EXPECT_LE(s_recurrence_residual(s, alpha, p), 1e-12);
        for (std::size_t l = 1; l < s.size(); ++l) EXPECT_LT(s[l], s[l - 1]);
      }
}

TEST(SSequence, Errors) {
  EXPECT_THROW(s_sequence(0, 0.0, -1.0), InvalidInput);
  EXPECT_THROW(s_sequence(2, 1.0, -1.0), InvalidInput);
  EXPECT_THROW(s_sequence(2, 0.0, 0.5), InvalidInput);
}

TEST(NegativeAdversary, GroupSizesTelescope) {
  const auto c = NegativeAdversaryConfig::make(256, -1.0, 6, 0.0);
  std::size_t total = c.bad_count();
  for (int l = 1; l <= c.L; ++l) total += c.group_size(l);
  EXPECT_EQ(total, 256u);
  EXPECT_THROW(NegativeAdversaryConfig::make(4, -1.0, 6, 0.0), ConfigError);
  EXPECT_THROW(NegativeAdversaryConfig::make(1, -1.0, 1, 0.0), ConfigError);
}

TEST(NegativeAdversary, UniformOpponent) {
  const auto c = NegativeAdversaryConfig::make(100, -1.0, 1, 0.0);
  UniformAllocator alg;
  const auto run = run_negative_adversary(c, alg, BaseMode::physical);
  EXPECT_TRUE(validate_instance(run.instance, 1e-9).pass);
  const auto& bad = run.groups.back();
  EXPECT_EQ(bad.size(), c.bad_count());
  double avg = 0.0;
  for (auto a : bad) avg += run.utilities[a];
  avg /= static_cast<double>(bad.size());
  EXPECT_LT(avg, (c.L + 1.0) / 100.0);
  EXPECT_FALSE(run.warnings.empty());
}

TEST(NegativeAdversary, GroupsPartitionAgents) {
  const auto c = NegativeAdversaryConfig::make(300, -1.0, 4, 0.0);
  NashianAllocator alg;
  const auto run = run_negative_adversary(c, alg);
  std::set<std::size_t> seen;
  for (const auto& g : run.groups)
    for (auto a : g) EXPECT_TRUE(seen.insert(a).second);
  EXPECT_EQ(seen.size(), 300u);
  for (int l = 1; l <= c.L; ++l) EXPECT_EQ(run.groups[l - 1].size(), c.group_size(l));
  EXPECT_TRUE(validate_instance(run.instance, 1e-9).pass);
}

TEST(NegativeAdversary, ReferenceAllocationMeetsLowerBound) {
  for (int L : {1, 2, 4}) {
    const auto c = NegativeAdversaryConfig::make(1024, -1.0, L, 0.0);
    MixedAllocator alg;
    const auto run = run_negative_adversary(c, alg);
    const auto x = negative_reference_allocation(run);
    EXPECT_TRUE(x.feasible(1e-12));
    const auto u = utilities_of(run.instance, x);
    const double w = p_mean_welfare(u, PMeanParam::finite(-1.0));
    const double nn = 1024.0;
    const double exact = std::pow(1.0 + L, -1.0) * std::pow(nn, 1.0 - 2.0 * c.s.back());
    EXPECT_GE(w, exact) << L;
    for (auto a : run.groups.back()) EXPECT_NEAR(u[a], 1.0 / static_cast<double>(c.bad_count()), 1e-12);
  }
}

TEST(NegativeAdversary, Deterministic) {
  const auto c = NegativeAdversaryConfig::make(128, -1.0, 3, 0.0);
  NashianAllocator a1, a2;
  const auto r1 = run_negative_adversary(c, a1);
  const auto r2 = run_negative_adversary(c, a2);
  EXPECT_EQ(io::instance_to_json(r1.instance).dump(), io::instance_to_json(r2.instance).dump());
}

TEST(PositiveAdversary, ConfigDerivation) {
  const auto c = PositiveAdversaryConfig::make(4096, 0.1);
  EXPECT_EQ(c.M, 4u);
  EXPECT_EQ(c.L, 5);
  EXPECT_FALSE(c.warnings.empty());
  ASSERT_EQ(c.v.size(), 5u);
  EXPECT_NEAR(c.v.back(), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(c.v.front(), std::exp(-5.0), 1e-15);
  EXPECT_THROW(PositiveAdversaryConfig::make(4096, 0.1, std::size_t{3}), ConfigError);
  EXPECT_THROW(PositiveAdversaryConfig::make(8, 0.01), ConfigError);
  EXPECT_THROW(PositiveAdversaryConfig::make(4096, -0.1), ConfigError);
  const double ln = std::log(4096.0);
  EXPECT_NEAR(PositiveAdversaryConfig::make(4096, 0.01).raw_M, ln / (4.0 * std::log(ln)), 1e-12);
  EXPECT_NEAR(PositiveAdversaryConfig::make(4096, 0.5).raw_M, 0.5, 1e-15);
  EXPECT_EQ(PositiveAdversaryConfig::make(4096, 0.01, std::size_t{6}).M, 6u);
}

TEST(PositiveAdversary, ReferenceAllocationAndOpponentBound) {
  const auto c = PositiveAdversaryConfig::make(1024, 0.05);
  UniformAllocator alg;
  const auto run = run_positive_adversary(c, alg, BaseMode::physical);
  EXPECT_TRUE(validate_instance(run.instance, 1e-9).pass);
  const auto x = positive_reference_allocation(run);
  EXPECT_TRUE(x.feasible(1e-12));
  const auto u = utilities_of(run.instance, x);
  const double good_floor = (std::exp(1.0) - 2.0) / (std::exp(1.0) - 1.0);
  for (int l = 1; l <= c.L; ++l) {
    double avg = 0.0;
    for (auto a : run.groups[l - 1]) {
      EXPECT_GE(u[a], c.v[l - 1] * (1.0 - 1e-12));
      avg += run.utilities[a];
    }
    avg /= static_cast<double>(run.groups[l - 1].size());
    EXPECT_LE(avg, 3.0 * c.v[l - 1] / static_cast<double>(c.M));
  }
  for (auto a : run.groups.back()) EXPECT_GE(u[a], good_floor);
}

TEST(RandomInstance, Examples) {
  const auto one = random_instance(1, 7, 3, {Distribution::sparse, 1, std::nullopt});
  EXPECT_NEAR(one.total_value(0), 1.0, 1e-15);
  const auto a = random_instance(8, 20, 42);
  EXPECT_TRUE(validate_instance(a, 1e-12).pass);
  EXPECT_EQ(io::instance_to_json(a).dump(), io::instance_to_json(random_instance(8, 20, 42)).dump());
  EXPECT_NE(io::instance_to_json(a).dump(), io::instance_to_json(random_instance(8, 20, 43)).dump());
}

TEST(RandomInstance, Distributions) {
  const auto sparse = random_instance(10, 30, 5, {Distribution::sparse, 2, std::nullopt});
  std::size_t nonzero = 0;
  for (const auto& it : sparse.items())
    for (double v : it.values) nonzero += v > 0.0;
  EXPECT_LT(nonzero, 10u * 30u / 2u);
  EXPECT_TRUE(validate_instance(sparse, 1e-12).pass);
  const auto corr = random_instance(10, 30, 5, {Distribution::correlated, 2, std::nullopt});
  EXPECT_TRUE(validate_instance(corr, 1e-12).pass);
  const V mono{0.5, 1.0, 0.75};
  const auto het = random_instance(3, 9, 5, {Distribution::uniform, 2, mono});
  EXPECT_TRUE(validate_instance(het, 1e-12).pass);
  EXPECT_DOUBLE_EQ(het.monopolist_ratio(), 2.0);
  EXPECT_THROW(random_instance(0, 3, 1), InvalidInput);
}

}  // namespace
}  // namespace pmean
