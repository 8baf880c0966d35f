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

// Numerical building blocks shared by the samplers and the diagnostics:
// integer-shape incomplete gamma, adaptive Gauss-Kronrod quadrature,
// Kolmogorov-Smirnov statistics and mergeable moment accumulators.

#ifndef PONDSIM_NUMERICS_HPP_
#define PONDSIM_NUMERICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pondsim {

// Regularized incomplete gamma functions for integer shape n >= 1:
//   gamma_q_int(n, t) = P(Gamma(n, 1) > t) = e^{-t} sum_{j<n} t^j / j!
//   gamma_p_int(n, t) = P(Gamma(n, 1) < t) = 1 - gamma_q_int(n, t)
// Whichever side is small is summed directly (in log space, compensated), so
// both carry relative accuracy far into the tails.
double gamma_q_int(int n, double t);
double gamma_p_int(int n, double t);
double log_gamma_q_int(int n, double t);
double log_gamma_p_int(int n, double t);

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
  bool converged = false;
};

// Globally adaptive 15-point Gauss-Kronrod on [a, b]. Stops once the summed
// error estimate is below max(abs_tol, rel_tol * |value|) or max_intervals
// panels have been used.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double rel_tol, double abs_tol = 0.0, int max_intervals = 4000);

// As integrate(), but starting from the given panel breakpoints. Useful when
// the integrand varies on several well-separated scales.
QuadratureResult integrate_panels(const std::function<double(double)>& f,
                                  std::span<const double> breakpoints, double rel_tol,
                                  double abs_tol = 0.0, int max_intervals = 4000);

// One-sample KS distance sup |F_n - F| for a continuous reference CDF.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

// Two-sample KS distance; ties (discrete data) are handled by stepping both
// empirical CDFs through each distinct value before comparing.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

// Asymptotic critical value of the two-sample KS distance at level alpha.
double ks_two_sample_critical(std::size_t n, std::size_t m, double alpha);

// Raw power sums, mergeable across shards. Merging shards in a fixed order is
// bitwise reproducible.
struct Moments {
  std::uint64_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
  }
  void merge(const Moments& other) {
    count += other.count;
    sum += other.sum;
    sum_sq += other.sum_sq;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  double variance() const {
    if (count < 2) return 0.0;
    const double n = static_cast<double>(count);
    const double m = sum / n;
    return std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
  }
  double std_error() const {
    return count ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }
};

// Binomial proportion with its standard error.
struct Proportion {
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;

  double value() const { return trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0; }
  double std_error() const {
    if (!trials) return 0.0;
    const double p = value();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  }
};

}  // namespace pondsim

#endif  // PONDSIM_NUMERICS_HPP_
