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
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "pmean/waterfill.hpp"
#include "support/slice_oracle.hpp"

namespace pmean {
namespace {

using V = std::vector<double>;

TEST(Waterfill, SymmetricSplit) {
  const auto r = waterfill(V{0.5, 0.5}, V{1.0, 1.0}, NashRate{});
  EXPECT_NEAR(r.fractions[0], 0.5, 1e-12);
  EXPECT_NEAR(r.fractions[1], 0.5, 1e-12);
}

TEST(Waterfill, UnequalValues) {
  const auto r = waterfill(V{0.5, 0.5}, V{1.0, 0.5}, NashRate{});
  EXPECT_NEAR(r.fractions[0], 0.75, 1e-12);
  EXPECT_NEAR(r.fractions[1], 0.25, 1e-12);
  EXPECT_NEAR(1.0 / 1.25, 0.5 / 0.625, 1e-15);
  EXPECT_NEAR(r.level, 0.8, 1e-12);
  const auto s = testing::slice_fill(V{0.5, 0.5}, V{1.0, 0.5}, NashRate{}, 100000);
  EXPECT_NEAR(s.fractions[0], 0.75, 1e-3);
  EXPECT_NEAR(s.utilities[0], 1.25, 1e-3);
  EXPECT_NEAR(s.utilities[1], 0.625, 1e-3);
}

TEST(Waterfill, DominantAgentTakesAll) {
  const auto r = waterfill(V{0.5, 2.0}, V{0.1, 0.1}, NashRate{});
  EXPECT_NEAR(r.fractions[0], 1.0, 1e-12);
  EXPECT_EQ(r.fractions[1], 0.0);
  const auto s = testing::slice_fill(V{0.5, 2.0}, V{0.1, 0.1}, NashRate{}, 100000);
  EXPECT_NEAR(s.fractions[0], 1.0, 1e-9);
}

TEST(Waterfill, ZeroValueAgentsAndEmptyItems) {
  const auto r = waterfill(V{0.5, 0.0, 0.5}, V{1.0, 0.0, 0.0}, NashRate{});
  EXPECT_EQ(r.fractions, (V{1.0, 0.0, 0.0}));
  const auto z = waterfill(V{0.5, 0.5}, V{0.0, 0.0}, NashRate{});
  EXPECT_EQ(z.fractions, (V{0.0, 0.0}));
  EXPECT_EQ(z.alpha, 0.0);
}

TEST(Waterfill, AlphaIsIntegralOfLevel) {
  const V u{0.5, 0.5};
  const V v{1.0, 0.5};
  const auto r = waterfill(u, v, NashRate{});
  EXPECT_NEAR(r.alpha, std::log(1.25 / 0.5) + std::log(0.625 / 0.5), 1e-12);
}

TEST(Waterfill, SupplyScalesTheItem) {
  const auto r = waterfill(V{0.5, 0.5}, V{1.0, 1.0}, NashRate{}, 0.5);
  EXPECT_NEAR(r.fractions[0] + r.fractions[1], 0.5, 1e-12);
  EXPECT_NEAR(r.fractions[0], 0.25, 1e-12);
}

template <class R>
void expect_equalized(const V& u, const V& v, const R& rate, const WaterfillResult& r) {
  double level = -1.0;
  for (std::size_t a = 0; a < u.size(); ++a) {
    if (v[a] <= 0.0) continue;
    const double prio = v[a] * rate.rate(u[a] + v[a] * r.fractions[a]);
    if (r.fractions[a] > 1e-12) {
      if (level < 0.0) level = prio;
      EXPECT_NEAR(prio, level, 1e-8 * level);
    }
  }
  for (std::size_t a = 0; a < u.size(); ++a)
    if (v[a] > 0.0 && r.fractions[a] <= 1e-12) {
      EXPECT_LE(v[a] * rate.rate(u[a]), level * (1.0 + 1e-8));
    }
}

TEST(Waterfill, ActiveAgentsEndLevel) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(0.05, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    V u(6), v(6);
    for (auto& x : u) x = d(rng);
    for (auto& x : v) x = d(rng) * 0.5;
    const auto r = waterfill(u, v, NashRate{});
    EXPECT_NEAR(std::accumulate(r.fractions.begin(), r.fractions.end(), 0.0), 1.0, 1e-12);
    expect_equalized(u, v, NashRate{}, r);
    const auto pr = waterfill(u, v, PowerRate{0.5});
    expect_equalized(u, v, PowerRate{0.5}, pr);
  }
}

template <class R>
void expect_matches_slices(const R& rate, std::uint64_t seed, double umin, double uspan) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 2 + rep % 5;
    V u(n), v(n);
    for (auto& x : u) x = umin + d(rng) * uspan;
    for (auto& x : v) x = d(rng) < 0.2 ? 0.0 : d(rng) * 0.6;
    const auto r = waterfill(u, v, rate);
    const auto s = testing::slice_fill(u, v, rate, 10000);
    for (std::size_t a = 0; a < n; ++a) {
      EXPECT_NEAR(r.fractions[a], s.fractions[a], 1e-2);
      EXPECT_NEAR(u[a] + v[a] * r.fractions[a], s.utilities[a], 1e-3);
    }
  }
}

TEST(Waterfill, MatchesSliceOracleNash) { expect_matches_slices(NashRate{}, 1, 0.05, 0.8); }
TEST(Waterfill, MatchesSliceOraclePower) { expect_matches_slices(PowerRate{0.25}, 2, 0.05, 0.8); }
TEST(Waterfill, MatchesSliceOracleRegularized) { expect_matches_slices(RegularizedRate{0.5, 4}, 3, 0.25, 0.4); }

TEST(RegularizedGamma, InitialValueAndMonotone) {
  EXPECT_NEAR(regularized_gamma(0.5, 2), (std::log(3.0) + 1.0) / 2.0, 1e-15);
  EXPECT_NEAR(regularized_gamma(0.5, 2), 1.0493061443340548, 1e-15);
  const std::size_t n = 4;
  EXPECT_LT(regularized_gamma(0.25, n), regularized_gamma(0.5, n));
  EXPECT_LT(regularized_gamma(0.5, n), regularized_gamma(1.25, n));
}

TEST(RegularizedRate, InverseAndIntegral) {
  const RegularizedRate rate{0.5, 4};
  for (double u : {0.3, 0.7, 1.1}) EXPECT_NEAR(rate.utility_at(rate.rate(u)), u, 1e-12);
  const double h = 1e-6;
  const double mid = 0.6;
  EXPECT_NEAR(rate.integral(mid - h, mid + h) / (2 * h), rate.rate(mid), 1e-6);
}

TEST(PowerRate, MatchesFineSlices) {
  const PowerRate rate{0.3};
  const V u{0.2, 0.4, 0.9};
  const V v{0.5, 0.3, 0.2};
  const auto r = waterfill(u, v, rate);
  const auto s = testing::slice_fill(u, v, rate, 20000);
  for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(r.fractions[a], s.fractions[a], 1e-3);
}

TEST(LevelFill, Thirds) {
  const auto r = level_fill(V{0.4, 0.4, 0.4}, V{1.0, 1.0, 1.0});
  for (double f : r.fractions) EXPECT_NEAR(f, 1.0 / 3.0, 1e-12);
}

TEST(LevelFill, RaisesLowestFirst) {
  const auto r = level_fill(V{0.1, 0.5, 2.0}, V{1.0, 1.0, 1.0});
  EXPECT_NEAR(r.fractions[0], 0.7, 1e-12);
  EXPECT_NEAR(r.fractions[1], 0.3, 1e-12);
  EXPECT_EQ(r.fractions[2], 0.0);
  EXPECT_NEAR(r.level, 0.8, 1e-12);
}

TEST(LevelFill, SkipsZeroValues) {
  const auto r = level_fill(V{1.0, 0.9}, V{0.5, 0.0});
  EXPECT_EQ(r.fractions, (V{1.0, 0.0}));
}

}  // namespace
}  // namespace pmean
