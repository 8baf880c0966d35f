// Copyright 2026 The pondsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pondsim/defects.hpp"

namespace pondsim {
namespace {

TEST(Defects, SmallExamples) {
  const DefectProfile f = defect_reach_dp(TreeParams(2), 0.5, 3, 2);
  EXPECT_EQ(f.F(1, 0), 0.75);
  EXPECT_EQ(f.F(1, 1), 1.0);
  EXPECT_EQ(f.F(2, 0), 39.0 / 64.0);
  for (std::size_t j = 0; j <= 2; ++j) EXPECT_EQ(f.F(0, j), 1.0);
}

// Exact agreement: every DP entry is a dyadic rational and must equal the
// enumerated count over 2^14 configurations bit for bit.
TEST(Defects, BruteForceExact) {
  const DefectProfile f = defect_reach_dp(TreeParams(2), 0.5, 3, 2);
  const auto counts = defect_brute_force_counts(2, 3, 2);
  const double total = std::ldexp(1.0, 2 + 4 + 8);
  for (std::size_t k = 0; k <= 3; ++k) {
    for (std::size_t j = 0; j <= 2; ++j) {
      EXPECT_EQ(f.F(k, j), static_cast<double>(counts[k][j]) / total) << k << " " << j;
    }
  }
  EXPECT_EQ(counts[2][0] * 64, 39u * (std::uint64_t{1} << 14));
}

TEST(Defects, Monotonicity) {
  for (int sigma : {2, 3}) {
    for (double p : {0.1, 1.0 / sigma, 0.7}) {
      const DefectProfile f = defect_reach_dp(TreeParams(sigma), p, 2000, 4);
      for (std::size_t k = 0; k <= 2000; ++k) {
        for (std::size_t j = 0; j <= 4; ++j) {
          ASSERT_GE(f.F(k, j), 0.0);
          ASSERT_LE(f.F(k, j), 1.0);
          if (j > 0) ASSERT_GE(f.F(k, j), f.F(k, j - 1));
          if (k > 0) ASSERT_LE(f.F(k, j), f.F(k - 1, j));
        }
      }
    }
  }
}

TEST(Defects, CriticalSurvival) {
  const TreeParams t(2);
  const auto a = critical_survival(t, 1000000);
  EXPECT_EQ(a[0], 0.75);
  for (std::size_t k = 1; k < a.size(); ++k) ASSERT_LT(a[k], a[k - 1]);
  EXPECT_GE(1e4 * a[9999], 3.9);
  EXPECT_LE(1e4 * a[9999], 4.1);
  EXPECT_GT(a.back(), 0.0);
  EXPECT_GE(1e6 * a.back(), 3.5);
  EXPECT_LE(1e6 * a.back(), 4.5);
  const auto b = critical_survival(TreeParams(3), 100000);
  EXPECT_NEAR(1e5 * b.back(), 3.0, 0.05);
}

TEST(Defects, ScalingDiagnostic) {
  const TreeParams t(2);
  const DefectProfile f = defect_reach_dp(t, t.p_c(), 1000000, 3);
  const std::vector<std::size_t> grid = {100, 1000, 10000, 100000, 1000000};
  const auto n0 = defect_scaling_diagnostic(f, 0, grid);
  EXPECT_NEAR(n0.back().second, 4.0, 0.01);
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto c = defect_scaling_diagnostic(f, n, grid);
    double lo = INFINITY, hi = 0;
    for (const auto& [k, v] : c) {
      EXPECT_NEAR(v, f.F(k, n) * std::pow(double(k), std::ldexp(1.0, -int(n))), 1e-12 * v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    EXPECT_LT(hi / lo, 3.0) << n;
  }
  EXPECT_THROW(defect_scaling_diagnostic(f, 4, grid), std::invalid_argument);
}

TEST(Defects, MonteCarloExamples) {
  const TreeParams t(2);
  RngStream rng(1, 0);
  const McEstimate e = defect_reach_mc(t, 0.5, 2, 0, 1000000, rng);
  EXPECT_LT(std::abs(e.estimate - 39.0 / 64.0), 4 * e.stderr_);
  EXPECT_EQ(defect_reach_mc(t, 0.3, 3, 3, 1000, rng).estimate, 1.0);
  EXPECT_EQ(defect_reach_mc(t, 0.3, 3, 5, 1000, rng).estimate, 1.0);
  EXPECT_EQ(defect_reach_mc(t, 1.0, 50, 0, 1000, rng).estimate, 1.0);
  const McEstimate tiny = defect_reach_mc(t, 0.5, 30, 2, 100, rng, 10);
  EXPECT_TRUE(tiny.budget_exhausted);
}

TEST(Defects, MonteCarloGrid) {
  RngStream rng(2, 0);
  const int reps = 40000;
  for (int sigma : {2, 3}) {
    const TreeParams t(sigma);
    for (double p : {t.p_c(), 0.3}) {
      const DefectProfile f = defect_reach_dp(t, p, 6, 2);
      for (std::size_t k : {4, 6}) {
        for (std::size_t n = 0; n <= 2; ++n) {
          const McEstimate e = defect_reach_mc(t, p, k, n, reps, rng);
          const double exact = f.F(k, n);
          const double se = std::sqrt(exact * (1 - exact) / reps);
          EXPECT_LE(std::abs(e.estimate - exact), 4 * se + 1e-12)
              << sigma << " " << p << " " << k << " " << n;
        }
      }
    }
  }
}

}  // namespace
}  // namespace pondsim
