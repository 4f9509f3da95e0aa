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

// Slice oracle: the item is cut into `slices` equal pieces and each piece goes
// whole to the agent of highest priority values[a] * rate(u[a]).

#ifndef PMEAN_TESTS_SLICE_ORACLE_HPP
#define PMEAN_TESTS_SLICE_ORACLE_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "pmean/waterfill.hpp"

namespace pmean::testing {

struct SliceResult {
  std::vector<double> fractions;
  std::vector<double> utilities;
};

template <PriorityRate R>
SliceResult slice_fill(std::span<const double> u, std::span<const double> values, const R& rate,
                       std::size_t slices) {
  const std::size_t n = u.size();
  SliceResult r{std::vector<double>(n, 0.0), std::vector<double>(u.begin(), u.end())};
  const double piece = 1.0 / static_cast<double>(slices);
  for (std::size_t k = 0; k < slices; ++k) {
    std::size_t best = n;
    double best_prio = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (values[a] <= 0.0) continue;
      const double pr = values[a] * rate.rate(r.utilities[a]);
      if (best == n || pr > best_prio) {
        best = a;
        best_prio = pr;
      }
    }
    if (best == n) break;
    r.fractions[best] += piece;
    r.utilities[best] += values[best] * piece;
  }
  return r;
}

}  // namespace pmean::testing

#endif  // PMEAN_TESTS_SLICE_ORACLE_HPP
