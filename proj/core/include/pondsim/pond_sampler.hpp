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

// Structural pond sampler. Given its outlet weight Q, a pond is a backbone
// segment of geometric length L with parameter delta(Q); each backbone edge
// at height h has sigma-1 sibling edges hanging from the vertex at height
// h-1, and each sibling independently carries a subcritical percolation
// cluster with parameter p_c (1 - delta).
//
// A sibling cluster is counted from the sibling edge itself: it is empty
// when the sibling edge is closed, and otherwise is that edge plus the
// Galton-Watson tree grown from its top vertex.

#ifndef PONDSIM_POND_SAMPLER_HPP_
#define PONDSIM_POND_SAMPLER_HPP_

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "pondsim/count.hpp"
#include "pondsim/outlet_chain.hpp"
#include "pondsim/percolation.hpp"
#include "pondsim/rng.hpp"

namespace pondsim {

struct SamplerOptions {
  // Maximum number of random draws per pond in exact mode; exceeding it
  // marks the sample truncated.
  std::uint64_t work_budget = std::uint64_t{1} << 36;
  // Ponds with delta below this use the scaling-limit sampler.
  double asymptotic_delta = 1e-9;
  bool keep_cluster_sizes = false;
  // Only the backbone length is sampled (R = V = L).
  bool lengths_only = false;
  // Stop as soon as V exceeds volume_cap or R exceeds radius_cap; the sample
  // is then marked censored and its statistics are lower bounds.
  std::uint64_t volume_cap = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t radius_cap = std::numeric_limits<std::uint64_t>::max();
};

struct PondSample {
  double q = 1.0;
  double delta = 1.0;
  double log_delta = 0.0;
  Count L;
  Count R;
  Count V;
  std::vector<std::uint64_t> side_cluster_sizes;  // only with keep_cluster_sizes
  bool asymptotic = false;
  bool censored = false;
  bool truncated = false;
};

// Z_n components in order: log 1/(Q_n - p_c), log L_n, log Lhat_n, log R_n,
// log R'_n, (1/2) log V_n, (1/2) log Vhat_n.
inline constexpr int kZDim = 7;
using ZVector = std::array<double, kZDim>;

struct PondChainSample {
  OutletChain chain;
  std::vector<PondSample> ponds;
  std::vector<Count> Lhat;
  std::vector<Count> Vhat;
  std::vector<Count> Rprime;
  std::vector<ZVector> Z;
  bool truncated = false;
  bool censored = false;
};

struct GwCluster {
  std::uint64_t size = 0;   // edges
  std::uint64_t depth = 0;  // generations
};

struct WalkResult {
  std::uint64_t T = 0;
  std::uint64_t V = 0;
};

// Geometric on {1, 2, ...} with P(L > m) = (1 - delta)^m.
std::uint64_t sample_backbone_length(double delta, RngStream& rng);

// Binomial(sigma, p) Galton-Watson tree from a single vertex; p < p_c.
GwCluster sample_gw_cluster(const TreeParams& params, double p, RngStream& rng);

PondSample sample_pond(const TreeParams& params, double q, RngStream& rng,
                       const SamplerOptions& options = {});

// As above for an outlet given in log coordinates, which stays meaningful
// after Q - p_c underflows.
PondSample sample_pond(const TreeParams& params, const OutletState& outlet, RngStream& rng,
                       const SamplerOptions& options = {});

// Samples Q_1..Q_n and then each pond independently given its outlet.
PondChainSample sample_pond_chain(const TreeParams& params, std::size_t n, RngStream& rng,
                                  const SamplerOptions& options = {});

// Builds the cumulative fields and Z vectors of an already sampled chain.
void fill_cumulative(PondChainSample& sample);

enum class WalkMode { kStepwise, kBatched };

// Exploration walk of the off-backbone edges of a pond with backbone length L:
// N_0 = (sigma-1) L, each examined edge is open with probability
// p_c (1 - delta) and adds sigma-1 unexamined edges, otherwise removes one.
// T is the hitting time of 0, V = (T + L) / sigma. The batched mode examines
// a whole generation of edges per binomial draw and yields the same law.
WalkResult excursion_walk_volume(const TreeParams& params, double q, std::uint64_t L,
                                 RngStream& rng, WalkMode mode = WalkMode::kBatched);

// Inverse Gaussian IG(mean, shape) by the Michael-Schucany-Haas method.
double sample_inverse_gaussian(double mean, double shape, RngStream& rng);

}  // namespace pondsim

#endif  // PONDSIM_POND_SAMPLER_HPP_
