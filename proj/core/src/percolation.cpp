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

#include "pondsim/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pondsim {
namespace {

void require_probability(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0, 1], got " +
                                std::to_string(x));
  }
}

// 1 - (1 - x)^n without cancellation for small x.
double one_minus_pow(double x, double n) {
  return -std::expm1(n * std::log1p(-x));
}

// Reduced fixed-point residual (1 - (1 - p t)^sigma) / t - 1. Strictly
// decreasing in t on (0, 1]; its only root there is theta(p).
double reduced_residual(double sigma, double p, double t) {
  return one_minus_pow(p * t, sigma) / t - 1.0;
}

double reduced_residual_slope(double sigma, double p, double t) {
  const double inner = std::pow(1.0 - p * t, sigma - 1.0);
  return (sigma * p * inner * t - one_minus_pow(p * t, sigma)) / (t * t);
}

}  // namespace

TreeParams::TreeParams(int sigma) : sigma_(sigma), p_c_(0.0) {
  if (sigma < 2) {
    throw std::invalid_argument("tree degree sigma must be >= 2, got " +
                                std::to_string(sigma));
  }
  p_c_ = 1.0 / static_cast<double>(sigma);
}

double critical_probability(const TreeParams& params) { return params.p_c(); }

double theta_generic(const TreeParams& params, double p) {
  require_probability(p, "p");
  if (p <= params.p_c()) return 0.0;
  if (p == 1.0) return 1.0;
  const double sigma = params.sigma();

  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 400 && hi - lo > 2.0 * std::numeric_limits<double>::epsilon() * hi;
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (reduced_residual(sigma, p, mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 3; ++it) {
    const double slope = reduced_residual_slope(sigma, p, t);
    if (!(slope < 0.0)) break;
    const double next = t - reduced_residual(sigma, p, t) / slope;
    if (!(next > 0.0 && next <= 1.0)) break;
    t = next;
  }
  const double residual = one_minus_pow(p * t, sigma) - t;
  if (!(std::abs(residual) <= 1e-12)) {
    throw NumericsError("theta solver did not converge for p = " + std::to_string(p));
  }
  return t;
}

double theta(const TreeParams& params, double p) {
  require_probability(p, "p");
  if (p <= params.p_c()) return 0.0;
  if (params.sigma() == 2) return (2.0 * p - 1.0) / (p * p);
  return theta_generic(params, p);
}

double invert_theta(const TreeParams& params, double th) {
  require_probability(th, "theta");
  return params.p_c() + excess_from_theta(params, th);
}

double excess_slope(const TreeParams& params) {
  const double s = params.sigma();
  return (s - 1.0) / (2.0 * s * s);
}

double delta_slope(const TreeParams& params) {
  const double s = params.sigma();
  return (s - 1.0) / (2.0 * s);
}

double excess_from_theta(const TreeParams& params, double th) {
  require_probability(th, "theta");
  if (th == 0.0) return 0.0;
  const double a = params.p_c();
  if (th < 0.2) {
    // p(th) - p_c = sum_{k>=2} (-1)^{k+1} C(a, k) th^{k-1}; every term is
    // positive for 0 < a < 1.
    double binom = a * (a - 1.0) / 2.0;  // C(a, 2)
    double power = th;
    double sum = 0.0;
    for (int k = 2; k < 80; ++k) {
      const double term = ((k % 2 == 1) ? binom : -binom) * power;
      sum += term;
      if (term <= 1e-18 * sum) break;
      binom *= (a - k) / (k + 1.0);
      power *= th;
    }
    return sum;
  }
  const double p = one_minus_pow(th, a) / th;
  return p - a;
}

double delta_from_theta(const TreeParams& params, double th) {
  require_probability(th, "theta");
  if (th == 0.0) return 0.0;
  const double sigma = params.sigma();
  const double eps = excess_from_theta(params, th);
  const double p = params.p_c() + eps;
  if (th > 0.5) {
    return 1.0 - sigma * p * std::pow(1.0 - p * th, sigma - 1.0);
  }
  // Uses (1 - p th)^sigma = 1 - th to remove the O(1) cancellation.
  return ((sigma - 1.0) * p * th - sigma * eps) / (1.0 - p * th);
}

double delta_of_q(const TreeParams& params, double q) {
  require_probability(q, "Q");
  if (q < params.p_c()) {
    throw std::invalid_argument("delta is defined only for Q >= p_c");
  }
  if (params.sigma() == 2) return 2.0 * q - 1.0;
  const double th = theta(params, q);
  const double sigma = params.sigma();
  const double delta = 1.0 - sigma * q * std::pow(1.0 - q * th, sigma - 1.0);
  return std::clamp(delta, 0.0, 1.0);
}

double subcritical_param(const TreeParams& params, double q) {
  return params.p_c() * (1.0 - delta_of_q(params, q));
}

}  // namespace pondsim
