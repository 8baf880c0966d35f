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

#ifndef PONDSIM_INVASION_HPP_
#define PONDSIM_INVASION_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pondsim/percolation.hpp"
#include "pondsim/pond_sampler.hpp"
#include "pondsim/rng.hpp"

namespace pondsim {

class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Child indices from the root; the edge is the last step of the path.
struct EdgeId {
  std::vector<std::uint8_t> path;
  bool operator==(const EdgeId&) const = default;
};

struct InvasionStep {
  double weight = 0.0;
  std::uint32_t depth = 0;   // depth of the edge's top vertex (root edges: 1)
  std::int64_t parent = -1;  // step index of the parent edge, -1 for root edges
  std::uint8_t child = 0;
};

// A boundary edge exposed during the run, recorded only on request.
struct ExposedEdge {
  std::int64_t parent = -1;
  std::uint8_t child = 0;
  double weight = 0.0;
};

struct InvasionTrace {
  TreeParams params{2};
  std::vector<InvasionStep> steps;
  std::vector<ExposedEdge> exposed;  // in exposure order
  std::uint64_t ties = 0;
  bool valid = true;
};

struct InvasionOptions {
  std::uint64_t memory_budget_bytes = std::uint64_t{4} << 30;
  bool record_exposed = false;
};

// Invasion percolation on the lazily grown forward tree: at every step the
// boundary edge of minimal weight is added. Weights are drawn when an edge
// first enters the boundary.
InvasionTrace run_invasion(const TreeParams& params, std::uint64_t steps, RngStream& rng,
                           const InvasionOptions& options = {});

EdgeId edge_id(const InvasionTrace& trace, std::size_t step);

struct Outlet {
  std::uint64_t step = 0;  // 1-based step index
  double weight = 0.0;
  std::uint32_t depth = 0;
  bool certified = false;
};

struct PondStats {
  double q = 0.0;
  std::uint64_t L = 0;
  std::uint64_t R = 0;
  std::uint64_t V = 0;
};

struct PondDecomposition {
  std::vector<Outlet> outlets;
  std::vector<PondStats> pond_stats;
  std::size_t certified_count = 0;
};

struct ExtractOptions {
  double safety_fraction = 0.5;
  // Certified outlets also need (w - p_c) > margin_factor (m - p_c), with m
  // the largest weight invaded in the last quarter of the trace. Zero
  // disables the criterion.
  double margin_factor = 10.0;
};

// Outlets are the strict suffix maxima of the invaded weights that exceed
// p_c. Pond i spans steps (Vhat_{i-1}, Vhat_i], ending with its outlet.
PondDecomposition extract_ponds(const InvasionTrace& trace, const ExtractOptions& options = {});

// Same, directly on a weight/depth record (depths may be empty when only the
// weights matter).
PondDecomposition extract_ponds(const TreeParams& params, const std::vector<double>& weights,
                                const std::vector<std::uint32_t>& depths,
                                const ExtractOptions& options = {});

struct CrossValidationConfig {
  std::uint64_t replicates = 10000;
  std::uint64_t steps = 100000;
  std::size_t ponds_to_compare = 1;
  ExtractOptions extract;
  std::uint64_t reference_factor = 10;  // structural samples per invasion replicate
  double volume_mean_cap = 100.0;       // V is compared through E[min(V, cap)]
  double ks_threshold = 0.02;
  double mean_gap_threshold = 0.05;
  double abort_fraction = 0.1;
};

// Certified first ponds from many invasion runs, or the structural analogue.
// Pond i of a replicate is present only when ponds 1..i are all certified
// (invasion) or Vhat_i fits in the certification window (structural).
struct FirstPondSet {
  std::size_t ponds = 1;
  std::uint64_t replicates = 0;
  std::vector<std::uint64_t> missing;         // per pond index
  std::vector<std::vector<double>> q, L, R, V;  // per pond index
  std::uint64_t ties = 0;

  void merge(const FirstPondSet& other);
};

FirstPondSet collect_invasion_ponds(const TreeParams& params, const CrossValidationConfig& config,
                                    std::uint64_t replicates, RngStream& rng);

FirstPondSet collect_structural_ponds(const TreeParams& params,
                                      const CrossValidationConfig& config,
                                      std::uint64_t replicates, RngStream& rng);

struct MetricRow {
  std::string name;
  double value = 0.0;
  double stderr_ = 0.0;
  double threshold = 0.0;
  bool gated = true;
  bool pass = true;
};

struct CrossValidationReport {
  std::vector<MetricRow> metrics;
  std::vector<double> certified_fraction;  // per pond index
  std::uint64_t ties = 0;
  bool pass() const;
};

CrossValidationReport compare_first_ponds(const FirstPondSet& invasion,
                                          const FirstPondSet& structural,
                                          const CrossValidationConfig& config);

// Sequential composition of the three steps above.
CrossValidationReport cross_validate_first_ponds(const TreeParams& params,
                                                 const CrossValidationConfig& config,
                                                 RngStream& rng);

}  // namespace pondsim

#endif  // PONDSIM_INVASION_HPP_
