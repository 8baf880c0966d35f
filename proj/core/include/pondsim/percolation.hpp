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

#ifndef PONDSIM_PERCOLATION_HPP_
#define PONDSIM_PERCOLATION_HPP_

#include <stdexcept>
#include <string>

namespace pondsim {

// Thrown when an internal root finder or quadrature fails to converge on
// inputs that satisfy the documented preconditions.
class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Forward regular tree of degree sigma: the root has sigma children and every
// other vertex has sigma children plus its parent.
class TreeParams {
 public:
  explicit TreeParams(int sigma);

  int sigma() const { return sigma_; }
  double p_c() const { return p_c_; }

  bool operator==(const TreeParams&) const = default;

 private:
  int sigma_;
  double p_c_;
};

// Critical probability 1/sigma of Bernoulli percolation on the tree.
double critical_probability(const TreeParams& params);

// Percolation probability theta(p): the survival probability of a
// Binomial(sigma, p) Galton-Watson process. Zero for p <= p_c; otherwise the
// positive root of t = 1 - (1 - p t)^sigma.
double theta(const TreeParams& params, double p);

// Same as theta() but always uses the generic bracketed solver, even for
// sigma = 2 where a closed form exists.
double theta_generic(const TreeParams& params, double p);

// Inverse of theta on [p_c, 1]: p = (1 - (1 - th)^(1/sigma)) / th.
double invert_theta(const TreeParams& params, double th);

// p(th) - p_c computed without cancellation for small th.
double excess_from_theta(const TreeParams& params, double th);

// Backbone geometric parameter delta = 1 - sigma Q (1 - Q theta(Q))^(sigma-1).
double delta_of_q(const TreeParams& params, double q);

// delta as a function of th = theta(Q), accurate as th -> 0.
double delta_from_theta(const TreeParams& params, double th);

// Side-cluster percolation parameter p_c (1 - delta(Q)).
double subcritical_param(const TreeParams& params, double q);

// Leading constants of the near-critical expansions:
//   p - p_c ~ excess_slope * theta,   delta ~ delta_slope * theta.
double excess_slope(const TreeParams& params);
double delta_slope(const TreeParams& params);

}  // namespace pondsim

#endif  // PONDSIM_PERCOLATION_HPP_
