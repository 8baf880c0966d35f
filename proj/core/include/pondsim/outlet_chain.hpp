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

#ifndef PONDSIM_OUTLET_CHAIN_HPP_
#define PONDSIM_OUTLET_CHAIN_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "pondsim/percolation.hpp"
#include "pondsim/rng.hpp"

namespace pondsim {

// Outlet weight together with the derived quantities needed downstream. Deep
// in the chain theta(Q) underflows, so the canonical coordinate is
// log_inv_theta = log(1/theta(Q)) and the excess over p_c and delta are also
// carried as logarithms.
struct OutletState {
  double q = 1.0;
  double log_inv_theta = 0.0;
  double excess = 0.0;      // Q - p_c; 0 once it underflows
  double log_excess = 0.0;  // log(Q - p_c), always finite
  double delta = 1.0;       // 0 once it underflows
  double log_delta = 0.0;   // log(delta), always finite
};

// Builds the state for a given log(1/theta(Q)) >= 0.
OutletState outlet_state_from_log_inv_theta(const TreeParams& params, double log_inv_theta);

// Builds the state for an outlet weight Q in (p_c, 1].
OutletState outlet_state_from_q(const TreeParams& params, double q);

// Decreasing sequence of outlet weights Q_1 > Q_2 > ... (1-based in the
// literature; index i here holds pond i+1). Strict monotonicity holds for
// log_inv_theta at every depth; q itself rounds to p_c in double precision
// once Q - p_c drops below ~1e-17.
struct OutletChain {
  TreeParams params{2};
  std::vector<double> q;
  std::vector<double> delta;
  std::vector<double> log_inv_theta;
  std::vector<double> log_excess;
  std::vector<double> log_delta;

  std::size_t size() const { return q.size(); }
  OutletState state(std::size_t i) const;
};

// theta(Q_n) is a product of n independent uniforms: log(1/theta(Q_n)) is a
// running sum of mean-one exponentials.
OutletChain sample_outlet_chain(const TreeParams& params, std::size_t n, RngStream& rng);

// Same chain but driven by caller-supplied uniforms in (0, 1]; used to pin
// down values in tests.
OutletChain outlet_chain_from_uniforms(const TreeParams& params, std::span<const double> uniforms);

// P(theta(Q_n) < x) = P(Gamma(n, 1) > log(1/x)).
double exact_theta_q_tail(int n, double x);

// P(Q_n < p_c (1 + eps)), exact.
double exact_q_tail(const TreeParams& params, int n, double eps);

// Height-indexed forward maximal weight process: Q_i repeated lengths[i] times.
std::vector<double> expand_to_forward_max(const OutletChain& chain,
                                          std::span<const std::uint64_t> lengths);

}  // namespace pondsim

#endif  // PONDSIM_OUTLET_CHAIN_HPP_
