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

// Connection to depth k with up to n vacant edges on the connecting path.
//
// Let D_k be the least number of vacant edges on a root-to-depth-k path.
// Conditioning on the sigma root edges, D_k = min over children c of
// (1{edge c vacant} + D'_{k-1}(c)) with independent copies D', so
//   P(D_k > j) = (1 - p P(D_{k-1} <= j) - (1-p) P(D_{k-1} <= j-1))^sigma.
// F[k][j] = P(D_k <= j) is filled row by row from F[0][j] = 1.

#ifndef PONDSIM_DEFECTS_HPP_
#define PONDSIM_DEFECTS_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include "pondsim/percolation.hpp"
#include "pondsim/rng.hpp"

namespace pondsim {

class DefectProfile {
 public:
  DefectProfile(TreeParams params, double p, std::size_t k_max, std::size_t n_max);

  const TreeParams& params() const { return params_; }
  double p() const { return p_; }
  std::size_t k_max() const { return k_max_; }
  std::size_t n_max() const { return n_max_; }

  double F(std::size_t k, std::size_t j) const { return table_[k * (n_max_ + 1) + j]; }
  double& F(std::size_t k, std::size_t j) { return table_[k * (n_max_ + 1) + j]; }

 private:
  TreeParams params_;
  double p_;
  std::size_t k_max_;
  std::size_t n_max_;
  std::vector<double> table_;
};

DefectProfile defect_reach_dp(const TreeParams& params, double p, std::size_t k_max,
                              std::size_t n_max);

// a_k = P_{p_c}(root connected to depth k), k = 1..k_max (index 0 holds a_1).
std::vector<double> critical_survival(const TreeParams& params, std::size_t k_max);

// (k, F[k][n] * k^{2^{-n}}) for each k in the grid.
std::vector<std::pair<std::size_t, double>> defect_scaling_diagnostic(
    const DefectProfile& profile, std::size_t n, const std::vector<std::size_t>& k_grid);

struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;
  bool budget_exhausted = false;
};

// Depth-first search on a lazily sampled tree, pruning branches whose defect
// count exceeds n and stopping at the first path that reaches depth k.
McEstimate defect_reach_mc(const TreeParams& params, double p, std::size_t k, std::size_t n,
                           std::uint64_t reps, RngStream& rng,
                           std::uint64_t work_budget = std::uint64_t{1} << 40);

// Exhaustive check for tiny trees: every configuration of the edges up to
// depth k_max, weighted by p^open (1-p)^closed. Returns the table of
// P(D_k <= j) for k <= k_max, j <= n_max as exact integer counts when
// p = 1/2 (entry = count / 2^edges).
std::vector<std::vector<std::uint64_t>> defect_brute_force_counts(int sigma, std::size_t k_max,
                                                                  std::size_t n_max);

}  // namespace pondsim

#endif  // PONDSIM_DEFECTS_HPP_
