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

#include "pondsim/numerics.hpp"
#include "pondsim/stats.hpp"

namespace pondsim {
namespace {

TEST(Rates, Phi) {
  EXPECT_EQ(rate_phi(1.0), 0.0);
  EXPECT_NEAR(rate_phi(2.0), 1 - std::log(2.0), 1e-15);
  EXPECT_NEAR(rate_phi(0.5), std::log(2.0) - 0.5, 1e-15);
  EXPECT_NEAR(rate_phi(2.0), 0.306853, 1e-6);
  EXPECT_NEAR(rate_phi(0.5), 0.193147, 1e-6);
  EXPECT_THROW(rate_phi(0.0), std::invalid_argument);
  EXPECT_THROW(rate_phi(-1.0), std::invalid_argument);
  for (double u = 0.05; u < 5; u += 0.05) {
    if (std::abs(u - 1) > 1e-9) EXPECT_GT(rate_phi(u), 0.0);
  }
}

TEST(Rates, Psi) {
  EXPECT_EQ(rate_psi(1.0), 0.0);
  EXPECT_NEAR(rate_psi(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(rate_psi(0.5), std::log(2.0) - 0.5, 1e-15);
  EXPECT_NEAR(rate_psi(0.5 - 1e-12), rate_psi(0.5 + 1e-12), 1e-11);
  EXPECT_THROW(rate_psi(-0.1), std::invalid_argument);
  for (double u = 0.0; u < 5; u += 0.05) {
    if (std::abs(u - 1) > 1e-9) EXPECT_GT(rate_psi(u), 0.0);
    if (u > 0) EXPECT_LE(rate_psi(u), rate_phi(u) + 1e-15);
    if (u >= 1) EXPECT_EQ(rate_psi(u), rate_phi(u));
  }
}

TEST(Rates, VariationalCheck) {
  for (int i = 0; i <= 30; ++i) {
    const double u = 0.1 * i;
    EXPECT_NEAR(psi_variational_check(u, 1e-4), rate_psi(u), 1e-6) << u;
  }
  EXPECT_NEAR(psi_variational_check(0.0, 1e-4), std::log(2.0), 1e-6);
  EXPECT_NEAR(psi_variational_check(2.0, 1e-4), rate_phi(2.0), 1e-6);
  EXPECT_NEAR(psi_variational_check(1.0, 1e-4), 0.0, 1e-6);
}

TEST(LdQ, ExactRoute) {
  const auto a = ld_diagnostic_q(100, {0.5, 1.0, 2.0});
  const auto b = ld_diagnostic_q(400, {0.5, 1.0, 2.0});
  EXPECT_LT(a[0].gap, 0.05);
  EXPECT_LT(a[2].gap, 0.05);
  EXPECT_LT(b[0].gap, a[0].gap);
  EXPECT_LT(b[2].gap, a[2].gap);
  EXPECT_EQ(a[1].rate, 0.0);
  EXPECT_EQ(a[1].empirical_rate, 0.0);
  EXPECT_NEAR(a[2].rate, rate_phi(2.0), 1e-15);
  // The Cramer correction is of order log(n) / n.
  EXPECT_LT(b[2].gap, 2 * std::log(400.0) / 400.0);
}

TEST(LdLength, MonteCarloSmall) {
  const TreeParams t(2);
  RngStream rng(1, 0);
  const LdCounts c = ld_length_counts(t, 10, {0.5, 1.5}, 200000, rng);
  EXPECT_EQ(c.trials, 200000u);
  const auto rows = ld_length_report(c);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_GT(r.hits, 100u);
    EXPECT_NEAR(r.rate, rate_psi(r.u), 1e-15);
    EXPECT_LT(r.gap, 0.3);
  }
}

TEST(TailQuadrature, FirstPond) {
  const TreeParams t(2);
  const TailQuadrature q = ln_tail_quadrature(t, 1, 10000);
  EXPECT_TRUE(q.converged);
  EXPECT_GE(1e4 * q.value, 3.8);
  EXPECT_LE(1e4 * q.value, 4.2);
  for (std::uint64_t k : {2u, 10u, 100u, 10000u, 1000000u}) {
    const TailQuadrature a = ln_tail_quadrature(t, 1, k);
    const TailQuadrature b = l1_tail_direct(t, k);
    EXPECT_NEAR(a.value / b.value, 1.0, 1e-8) << k;
  }
  EXPECT_THROW(ln_tail_quadrature(t, 1, 1), std::invalid_argument);
  EXPECT_THROW(ln_tail_quadrature(t, 0, 10), std::invalid_argument);
}

TEST(TailQuadrature, SecondPond) {
  const TreeParams t(2);
  const double k = 10000;
  const TailQuadrature q = ln_tail_quadrature(t, 2, 10000);
  EXPECT_TRUE(q.converged);
  const double ratio = q.value / (4 * std::log(k) / k);
  EXPECT_GE(ratio, 0.8);
  EXPECT_LE(ratio, 1.2);
  // P(L_n > k) increases with n.
  EXPECT_GT(ln_tail_quadrature(t, 3, 10000).value, q.value);
  EXPECT_LE(ln_tail_quadrature(t, 2, 2).value, 1.0);
}

TEST(TailQuadrature, AgreesWithMonteCarlo) {
  const TreeParams t(2);
  RngStream rng(2, 0);
  const std::uint64_t reps = 2000000;
  const TailCounts c = tail_counts(t, TailQuantity::kL, 1, {100}, reps, rng);
  const double p = ln_tail_quadrature(t, 1, 100).value;
  const double se = std::sqrt(p * (1 - p) / reps);
  EXPECT_LT(std::abs(c.hits[0] / double(reps) - p), 4 * se);
}

TEST(Tails, QuantityNames) {
  for (auto q : {TailQuantity::kR, TailQuantity::kV, TailQuantity::kLhat, TailQuantity::kVhat,
                 TailQuantity::kRprime, TailQuantity::kL}) {
    EXPECT_EQ(parse_tail_quantity(tail_quantity_name(q)), q);
  }
  EXPECT_THROW(parse_tail_quantity("W"), std::invalid_argument);
}

TEST(Tails, MedianSanityAndSummary) {
  const TreeParams t(2);
  RngStream rng(3, 0);
  for (auto q : {TailQuantity::kR, TailQuantity::kV, TailQuantity::kLhat, TailQuantity::kVhat,
                 TailQuantity::kRprime}) {
    const TailCounts c = tail_counts(t, q, 2, {1, 100, 1000}, 20000, rng);
    EXPECT_EQ(c.trials + c.truncated, 20000u);
    EXPECT_GT(c.hits[0] / double(c.trials), 0.4) << tail_quantity_name(q);
    EXPECT_GE(c.hits[0], c.hits[1]);
    EXPECT_GE(c.hits[1], c.hits[2]);
    const TailReport r = summarize_tail(t, c, 3.0, 0.15, 100);
    ASSERT_EQ(r.rows.size(), 3u);
    for (const auto& row : r.rows) EXPECT_EQ(row.usable, row.hits >= 100);
    const double k = 1000;
    const double scale = (q == TailQuantity::kV || q == TailQuantity::kVhat) ? std::sqrt(k) : k;
    EXPECT_NEAR(r.rows[2].compensated, r.rows[2].p_hat * scale / std::log(k), 1e-12);
  }
}

TEST(Tails, LhatConstant) {
  const TreeParams t(2);
  RngStream rng(4, 0);
  const TailReport r = tail_constant_estimate(t, TailQuantity::kLhat, 1, {1000, 10000}, 1000000, rng);
  EXPECT_NEAR(r.limit, 4.0, 1e-12);
  EXPECT_LT(r.limit_gap, 0.15);
  EXPECT_TRUE(r.bounded);
}

TEST(Empirical, ProcessAndDiagnostics) {
  const TreeParams t(2);
  RngStream rng(5, 0);
  SamplerOptions opt;
  opt.asymptotic_delta = 1e-3;
  const auto cps = clt_checkpoints(40, {0.5, 1.0}, 0.25, 0.75);
  EXPECT_EQ(cps, (std::vector<std::size_t>{10, 20, 30, 40}));
  EmpiricalProcess a = sample_empirical_process(t, 40, cps, 300, rng, opt);
  const EmpiricalProcess b = sample_empirical_process(t, 40, cps, 200, rng, opt);
  a.merge(b);
  EXPECT_EQ(a.replicates() + a.truncated, 500u);
  EXPECT_TRUE(a.has(20));
  EXPECT_FALSE(a.has(21));
  EXPECT_THROW(a.slot(21), std::invalid_argument);
  for (const auto& row : a.values) {
    for (const auto& z : row) {
      for (double v : z) EXPECT_TRUE(std::isfinite(v));
    }
  }
  const LlnReport l = lln_diagnostic(a, 40);
  EXPECT_TRUE(l.has_half);
  for (int c = 0; c < kZDim; ++c) EXPECT_NEAR(l.mean[c], 1.0, 0.25);
  const CltReport r = clt_diagnostic(a, {0.5, 1.0});
  EXPECT_EQ(r.ks_rows.size(), 2u * kZDim);
  EXPECT_GT(r.spread, 0.0);
  for (double v : r.increment_variance) EXPECT_NEAR(v, 0.5, 0.25);
  EXPECT_THROW(clt_diagnostic(a, {1.5}), std::invalid_argument);

  const EmpiricalProcess one = sample_empirical_process(t, 1, {1}, 50, rng, opt);
  const LlnReport s = lln_diagnostic(one, 1);
  EXPECT_FALSE(s.pass);
  for (double m : s.mean) EXPECT_TRUE(std::isfinite(m));
  EXPECT_THROW(lln_diagnostic(EmpiricalProcess{}, 1), std::invalid_argument);
}

TEST(Numerics, IncompleteGammaAndKs) {
  EXPECT_NEAR(gamma_q_int(1, 2.0), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(gamma_q_int(2, 1.0), 2 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(gamma_p_int(3, 0.5) + gamma_q_int(3, 0.5), 1.0, 1e-15);
  EXPECT_NEAR(log_gamma_q_int(100, 1000.0), std::log(gamma_q_int(100, 1000.0)), 1e-9);
  EXPECT_TRUE(std::isfinite(log_gamma_q_int(50, 5000.0)));
  EXPECT_NEAR(ks_statistic({0.5}, [](double x) { return x; }), 0.5, 1e-15);
  EXPECT_EQ(ks_two_sample({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_EQ(ks_two_sample({1, 2}, {3, 4}), 1.0);
  EXPECT_NEAR(kolmogorov_survival(1.36), 0.049, 1e-3);
}

}  // namespace
}  // namespace pondsim
