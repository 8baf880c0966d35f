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

#include "pondsim/defects.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pondsim {
namespace {

// 1 - (1 - c)^sigma. Repeated multiplication keeps dyadic inputs exact; the
// log1p form takes over once c is small enough to lose digits in 1 - c.
double one_minus_pow(double c, int sigma) {
  if (c < 1e-4) return -std::expm1(sigma * std::log1p(-c));
  const double b = 1.0 - c;
  double r = 1.0;
  for (int i = 0; i < sigma; ++i) r *= b;
  return 1.0 - r;
}

}  // namespace

DefectProfile::DefectProfile(TreeParams params, double p, std::size_t k_max, std::size_t n_max)
    : params_(params), p_(p), k_max_(k_max), n_max_(n_max),
      table_((k_max + 1) * (n_max + 1), 0.0) {}

DefectProfile defect_reach_dp(const TreeParams& params, double p, std::size_t k_max,
                              std::size_t n_max) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
  if (k_max == 0) throw std::invalid_argument("k_max must be >= 1");
  DefectProfile prof(params, p, k_max, n_max);
  for (std::size_t j = 0; j <= n_max; ++j) prof.F(0, j) = 1.0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    for (std::size_t j = 0; j <= n_max; ++j) {
      const double below = j == 0 ? 0.0 : prof.F(k - 1, j - 1);
      const double c = p * prof.F(k - 1, j) + (1.0 - p) * below;
      prof.F(k, j) = std::clamp(one_minus_pow(c, params.sigma()), 0.0, 1.0);
    }
  }
  return prof;
}

std::vector<double> critical_survival(const TreeParams& params, std::size_t k_max) {
  const DefectProfile prof = defect_reach_dp(params, params.p_c(), k_max, 0);
  std::vector<double> a(k_max);
  for (std::size_t k = 1; k <= k_max; ++k) a[k - 1] = prof.F(k, 0);
  return a;
}

std::vector<std::pair<std::size_t, double>> defect_scaling_diagnostic(
    const DefectProfile& profile, std::size_t n, const std::vector<std::size_t>& k_grid) {
  if (n > profile.n_max()) throw std::invalid_argument("n exceeds the table's n_max");
  const double exponent = std::ldexp(1.0, -static_cast<int>(n));
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t k : k_grid) {
    if (k > profile.k_max()) throw std::invalid_argument("k outside the table");
    out.emplace_back(k, profile.F(k, n) * std::pow(static_cast<double>(k), exponent));
  }
  return out;
}

McEstimate defect_reach_mc(const TreeParams& params, double p, std::size_t k, std::size_t n,
                           std::uint64_t reps, RngStream& rng, std::uint64_t work_budget) {
  if (k == 0 || reps == 0) throw std::invalid_argument("k and reps must be >= 1");
  struct Node {
    std::size_t depth;
    std::size_t defects;
  };
  McEstimate est;
  std::vector<Node> stack;
  std::uint64_t work = 0;
  const int sigma = params.sigma();
  for (std::uint64_t r = 0; r < reps; ++r) {
    stack.assign(1, Node{0, 0});
    bool reached = false;
    while (!stack.empty() && !reached) {
      const Node v = stack.back();
      stack.pop_back();
      for (int c = 0; c < sigma; ++c) {
        if (++work > work_budget) {
          est.budget_exhausted = true;
          break;
        }
        const std::size_t d = v.defects + (rng.bernoulli(p) ? 0 : 1);
        if (d > n) continue;
        if (v.depth + 1 == k) {
          reached = true;
          break;
        }
        stack.push_back({v.depth + 1, d});
      }
      if (est.budget_exhausted) break;
    }
    if (est.budget_exhausted) break;
    ++est.trials;
    if (reached) ++est.hits;
  }
  if (est.trials > 0) {
    const double t = static_cast<double>(est.trials);
    est.estimate = static_cast<double>(est.hits) / t;
    est.stderr_ = std::sqrt(est.estimate * (1.0 - est.estimate) / t);
  }
  return est;
}

std::vector<std::vector<std::uint64_t>> defect_brute_force_counts(int sigma, std::size_t k_max,
                                                                  std::size_t n_max) {
  // Edges in breadth-first order; edge e at depth d >= 2 has parent edge
  // (e - first(d)) / sigma + first(d - 1).
  std::vector<std::size_t> first(k_max + 2, 0);
  std::size_t level = 1;
  for (std::size_t d = 1; d <= k_max; ++d) {
    level *= static_cast<std::size_t>(sigma);
    first[d + 1] = first[d] + level;
  }
  const std::size_t edges = first[k_max + 1];
  if (edges > 24) throw std::invalid_argument("tree too large for enumeration");
  std::vector<std::vector<std::uint64_t>> counts(k_max + 1,
                                                 std::vector<std::uint64_t>(n_max + 1, 0));
  std::vector<std::size_t> cost(edges);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << edges); ++mask) {
    for (std::size_t d = 1; d <= k_max; ++d) {
      std::size_t best = SIZE_MAX;
      for (std::size_t e = first[d]; e < first[d + 1]; ++e) {
        const std::size_t vacant = (mask >> e) & 1 ? 0 : 1;
        const std::size_t up =
            d == 1 ? 0 : cost[(e - first[d]) / static_cast<std::size_t>(sigma) + first[d - 1]];
        cost[e] = up + vacant;
        best = std::min(best, cost[e]);
      }
      for (std::size_t j = 0; j <= n_max; ++j) {
        if (best <= j) ++counts[d][j];
      }
    }
  }
  for (std::size_t j = 0; j <= n_max; ++j) counts[0][j] = std::uint64_t{1} << edges;
  return counts;
}

}  // namespace pondsim
