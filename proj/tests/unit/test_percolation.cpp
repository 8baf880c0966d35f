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
#include <stdexcept>

#include "pondsim/percolation.hpp"

namespace pondsim {
namespace {

TEST(Percolation, CriticalProbability) {
  EXPECT_DOUBLE_EQ(critical_probability(TreeParams(2)), 0.5);
  EXPECT_DOUBLE_EQ(critical_probability(TreeParams(3)), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(critical_probability(TreeParams(10)), 0.1);
  EXPECT_THROW(TreeParams(1), std::invalid_argument);
}

TEST(Percolation, ThetaExamples) {
  const TreeParams t(2);
  EXPECT_EQ(theta(t, 0.5), 0.0);
  EXPECT_NEAR(theta(t, 0.6), 0.2 / 0.36, 1e-12);
  EXPECT_NEAR(theta(t, 1.0), 1.0, 1e-12);
  EXPECT_EQ(theta(t, 0.3), 0.0);
  EXPECT_THROW(theta(t, 1.5), std::invalid_argument);
}

TEST(Percolation, GenericSolverMatchesClosedForm) {
  const TreeParams t(2);
  for (int i = 0; i <= 1000; ++i) {
    const double p = 0.5 + 0.5 * i / 1000.0;
    EXPECT_NEAR(theta_generic(t, p), (2 * p - 1) / (p * p), 1e-10) << p;
  }
}

TEST(Percolation, FixedPointAndMonotone) {
  for (int sigma : {2, 3, 5, 10}) {
    const TreeParams t(sigma);
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double p = t.p_c() + (1.0 - t.p_c()) * i / 1000.0;
      const double th = theta(t, p);
      EXPECT_NEAR(1.0 - std::pow(1.0 - p * th, sigma), th, 1e-10);
      // theta rounds to 1 near p = 1 once sigma is large.
      if (i > 0 && th < 1.0 - 1e-12) EXPECT_GT(th, prev);
      if (i > 0) EXPECT_GE(th, prev);
      prev = th;
    }
  }
}

TEST(Percolation, InvertThetaExamplesAndRoundTrip) {
  const TreeParams t(2);
  EXPECT_NEAR(invert_theta(t, 0.75), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(invert_theta(t, 0.0), 0.5, 1e-15);
  EXPECT_NEAR(invert_theta(t, 1.0), 1.0, 1e-15);
  EXPECT_THROW(invert_theta(t, -0.1), std::invalid_argument);
  EXPECT_THROW(invert_theta(t, 1.1), std::invalid_argument);
  for (int i = 0; i <= 1000; ++i) {
    const double p = 0.5 + 0.5 * i / 1000.0;
    EXPECT_NEAR(invert_theta(t, theta(t, p)), p, 1e-10) << p;
  }
  // For sigma > 2, 1 - theta(p) ~ (1-p)^sigma loses the information about
  // p near 1 in double precision, so the round trip is checked below 0.9.
  for (int sigma : {3, 7}) {
    const TreeParams s(sigma);
    for (int i = 0; i <= 1000; ++i) {
      const double p = s.p_c() + (0.9 - s.p_c()) * i / 1000.0;
      EXPECT_NEAR(invert_theta(s, theta(s, p)), p, 1e-10) << sigma << " " << p;
    }
  }
}

TEST(Percolation, DeltaAndSubcriticalClosedForms) {
  const TreeParams t(2);
  EXPECT_NEAR(delta_of_q(t, 0.6), 0.2, 1e-12);
  EXPECT_NEAR(subcritical_param(t, 0.6), 0.4, 1e-12);
  for (int i = 0; i <= 1000; ++i) {
    const double q = 0.5 + 0.5 * i / 1000.0;
    EXPECT_NEAR(delta_of_q(t, q), 2 * q - 1, 1e-12);
    EXPECT_NEAR(subcritical_param(t, q), 1 - q, 1e-12);
  }
  for (int sigma : {2, 3, 6}) {
    const TreeParams s(sigma);
    EXPECT_NEAR(delta_of_q(s, s.p_c()), 0.0, 1e-15);
    EXPECT_NEAR(delta_of_q(s, 1.0), 1.0, 1e-12);
    EXPECT_NEAR(subcritical_param(s, s.p_c()), s.p_c(), 1e-15);
    EXPECT_NEAR(subcritical_param(s, 1.0), 0.0, 1e-12);
  }
  EXPECT_THROW(delta_of_q(t, 0.4), std::invalid_argument);
}

TEST(Percolation, NearCriticalSlope) {
  for (int sigma : {2, 3, 5}) {
    const TreeParams s(sigma);
    double prev_gap = INFINITY;
    for (double eps : {1e-3, 1e-4, 1e-5}) {
      const double ratio = delta_of_q(s, s.p_c() + eps) / (sigma * eps);
      const double gap = std::abs(ratio - 1.0);
      if (gap > 1e-9) EXPECT_LT(gap, prev_gap);
      prev_gap = gap;
    }
    EXPECT_LT(prev_gap, 0.05);
  }
}

TEST(Percolation, DeltaIncreasing) {
  const TreeParams s(3);
  double prev = -1.0;
  for (int i = 0; i <= 500; ++i) {
    const double q = s.p_c() + (1 - s.p_c()) * i / 500.0;
    const double d = delta_of_q(s, q);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    if (i > 0) EXPECT_GT(d, prev);
    prev = d;
  }
}

TEST(Percolation, SmallThetaForms) {
  for (int sigma : {2, 4}) {
    const TreeParams s(sigma);
    for (double th : {1e-2, 1e-4, 1e-6}) {
      const double p = invert_theta(s, th);
      EXPECT_NEAR(excess_from_theta(s, th), p - s.p_c(), 1e-9 * th + 1e-15);
      EXPECT_NEAR(delta_from_theta(s, th) / delta_of_q(s, p), 1.0, 1e-5);
    }
    EXPECT_NEAR(excess_from_theta(s, 1e-12) / (excess_slope(s) * 1e-12), 1.0, 1e-6);
    EXPECT_NEAR(delta_from_theta(s, 1e-12) / (delta_slope(s) * 1e-12), 1.0, 1e-6);
  }
}

}  // namespace
}  // namespace pondsim
