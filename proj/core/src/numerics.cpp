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

#include "pondsim/numerics.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

namespace pondsim {
namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

void require_shape(int n, double t) {
  if (n < 1) throw std::invalid_argument("gamma shape must be >= 1");
  if (!(t >= 0.0)) throw std::invalid_argument("gamma argument must be >= 0");
}

// log of e^{-t} sum_{j<n} t^j/j!, evaluated from the top term j = n-1 down.
// Every ratio j/t is <= 1 when t >= n-1, so the sum is dominated by its
// first term.
double log_upper_direct(int n, double t) {
  if (t == 0.0) return 0.0;
  const double log_top = -t + (n - 1) * std::log(t) - std::lgamma(static_cast<double>(n));
  CompensatedSum sum;
  double ratio = 1.0;
  for (int j = n - 1; j >= 0; --j) {
    sum.add(ratio);
    ratio *= j / t;
    if (ratio < 1e-18 * sum.value()) break;
  }
  return log_top + std::log(sum.value());
}

// log of e^{-t} sum_{j>=n} t^j/j!, evaluated from the first term upward.
double log_lower_direct(int n, double t) {
  if (t == 0.0) return -std::numeric_limits<double>::infinity();
  const double log_first = -t + n * std::log(t) - std::lgamma(n + 1.0);
  CompensatedSum sum;
  double ratio = 1.0;
  for (long j = n + 1; j < n + 1000000L; ++j) {
    sum.add(ratio);
    ratio *= t / static_cast<double>(j);
    if (ratio < 1e-18 * sum.value()) break;
  }
  return log_first + std::log(sum.value());
}

constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

Panel kronrod_panel(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[i] * pair;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace

double log_gamma_q_int(int n, double t) {
  require_shape(n, t);
  if (t >= n - 1.0) return log_upper_direct(n, t);
  return std::log1p(-std::exp(log_lower_direct(n, t)));
}

double log_gamma_p_int(int n, double t) {
  require_shape(n, t);
  if (t < n - 1.0) return log_lower_direct(n, t);
  return std::log1p(-std::exp(log_upper_direct(n, t)));
}

double gamma_q_int(int n, double t) { return std::exp(log_gamma_q_int(n, t)); }

double gamma_p_int(int n, double t) { return std::exp(log_gamma_p_int(n, t)); }

QuadratureResult integrate_panels(const std::function<double(double)>& f,
                                  std::span<const double> breakpoints, double rel_tol,
                                  double abs_tol, int max_intervals) {
  if (breakpoints.size() < 2) throw std::invalid_argument("need at least two breakpoints");
  std::priority_queue<Panel> panels;
  double total = 0.0;
  double total_error = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i + 1] > breakpoints[i])) {
      throw std::invalid_argument("breakpoints must be strictly increasing");
    }
    Panel p = kronrod_panel(f, breakpoints[i], breakpoints[i + 1]);
    total += p.value;
    total_error += p.error;
    panels.push(p);
  }
  QuadratureResult result;
  while (true) {
    const double target = std::max(abs_tol, rel_tol * std::abs(total));
    if (total_error <= target) {
      result.converged = true;
      break;
    }
    if (static_cast<int>(panels.size()) >= max_intervals) break;
    Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      panels.push(worst);
      break;
    }
    const Panel left = kronrod_panel(f, worst.a, mid);
    const Panel right = kronrod_panel(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
  }
  // Re-sum from the panels to shed the drift of incremental updates.
  double sum = 0.0;
  double err = 0.0;
  result.intervals = static_cast<int>(panels.size());
  while (!panels.empty()) {
    sum += panels.top().value;
    err += panels.top().error;
    panels.pop();
  }
  result.value = sum;
  result.error = err;
  if (!result.converged) {
    result.converged = err <= std::max(abs_tol, rel_tol * std::abs(sum));
  }
  return result;
}

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double rel_tol, double abs_tol, int max_intervals) {
  const std::array<double, 2> ends = {a, b};
  return integrate_panels(f, ends, rel_tol, abs_tol, max_intervals);
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::max((static_cast<double>(i) + 1.0) / n - f,
                             f - static_cast<double>(i) / n));
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_two_sample_critical(std::size_t n, std::size_t m, double alpha) {
  if (n == 0 || m == 0) throw std::invalid_argument("empty sample");
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double dn = static_cast<double>(n);
  const double dm = static_cast<double>(m);
  return c * std::sqrt((dn + dm) / (dn * dm));
}

}  // namespace pondsim
