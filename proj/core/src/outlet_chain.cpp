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

#include "pondsim/outlet_chain.hpp"

#include <cmath>
#include <stdexcept>

#include "pondsim/numerics.hpp"

namespace pondsim {
namespace {

// Below e^{-700} theta is within a few hundred binades of underflow; from
// there on the leading-order relations excess ~ c1 theta, delta ~ c2 theta
// are exact to double precision.
constexpr double kLogLinearThreshold = 700.0;

void append(OutletChain& chain, const OutletState& s) {
  chain.q.push_back(s.q);
  chain.delta.push_back(s.delta);
  chain.log_inv_theta.push_back(s.log_inv_theta);
  chain.log_excess.push_back(s.log_excess);
  chain.log_delta.push_back(s.log_delta);
}

}  // namespace

OutletState outlet_state_from_log_inv_theta(const TreeParams& params, double log_inv_theta) {
  if (!(log_inv_theta >= 0.0)) throw std::invalid_argument("log(1/theta) must be >= 0");
  OutletState s;
  s.log_inv_theta = log_inv_theta;
  if (log_inv_theta < kLogLinearThreshold) {
    const double th = std::exp(-log_inv_theta);
    s.excess = excess_from_theta(params, th);
    s.delta = delta_from_theta(params, th);
    s.log_excess = std::log(s.excess);
    s.log_delta = std::log(s.delta);
  } else {
    s.log_excess = -log_inv_theta + std::log(excess_slope(params));
    s.log_delta = -log_inv_theta + std::log(delta_slope(params));
    s.excess = std::exp(s.log_excess);
    s.delta = std::exp(s.log_delta);
  }
  s.q = params.p_c() + s.excess;
  return s;
}

OutletState outlet_state_from_q(const TreeParams& params, double q) {
  if (!(q > params.p_c() && q <= 1.0)) {
    throw std::invalid_argument("outlet weight must lie in (p_c, 1]");
  }
  const double th = theta(params, q);
  OutletState s = outlet_state_from_log_inv_theta(params, -std::log(th));
  s.q = q;
  s.excess = q - params.p_c();
  s.log_excess = std::log(s.excess);
  s.delta = delta_of_q(params, q);
  s.log_delta = std::log(s.delta);
  return s;
}

OutletState OutletChain::state(std::size_t i) const {
  OutletState s;
  s.q = q.at(i);
  s.delta = delta.at(i);
  s.log_inv_theta = log_inv_theta.at(i);
  s.log_excess = log_excess.at(i);
  s.log_delta = log_delta.at(i);
  s.excess = std::exp(s.log_excess);
  return s;
}

OutletChain sample_outlet_chain(const TreeParams& params, std::size_t n, RngStream& rng) {
  if (n == 0) throw std::invalid_argument("chain length must be >= 1");
  OutletChain chain;
  chain.params = params;
  double x = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x += rng.exponential();
    append(chain, outlet_state_from_log_inv_theta(params, x));
  }
  return chain;
}

OutletChain outlet_chain_from_uniforms(const TreeParams& params,
                                       std::span<const double> uniforms) {
  if (uniforms.empty()) throw std::invalid_argument("chain length must be >= 1");
  OutletChain chain;
  chain.params = params;
  double x = 0.0;
  for (double u : uniforms) {
    if (!(u > 0.0 && u <= 1.0)) throw std::invalid_argument("uniform must lie in (0, 1]");
    x -= std::log(u);
    append(chain, outlet_state_from_log_inv_theta(params, x));
  }
  return chain;
}

double exact_theta_q_tail(int n, double x) {
  if (n < 1) throw std::invalid_argument("pond index must be >= 1");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  return gamma_q_int(n, -std::log(x));
}

double exact_q_tail(const TreeParams& params, int n, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  const double q = params.p_c() * (1.0 + eps);
  if (q > 1.0 + 1e-15) throw std::invalid_argument("p_c (1 + eps) exceeds 1");
  return exact_theta_q_tail(n, theta(params, std::min(q, 1.0)));
}

std::vector<double> expand_to_forward_max(const OutletChain& chain,
                                          std::span<const std::uint64_t> lengths) {
  if (lengths.size() != chain.size()) {
    throw std::invalid_argument("expand_to_forward_max: need one length per pond");
  }
  std::vector<double> w;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] == 0) throw std::invalid_argument("pond lengths must be >= 1");
    w.insert(w.end(), lengths[i], chain.q[i]);
  }
  return w;
}

}  // namespace pondsim
