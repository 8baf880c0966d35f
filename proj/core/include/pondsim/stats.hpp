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

#ifndef PONDSIM_STATS_HPP_
#define PONDSIM_STATS_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pondsim/numerics.hpp"
#include "pondsim/percolation.hpp"
#include "pondsim/pond_sampler.hpp"
#include "pondsim/rng.hpp"

namespace pondsim {

// phi(u) = u - log u - 1.
double rate_phi(double u);

// psi(u) = phi(u) for u >= 1/2 and log 2 - u for u <= 1/2.
double rate_psi(double u);

// inf over v >= u of phi(v) + v - u, on a grid over [max(u, 1e-6), u + 10]
// together with the stationary point v = 1/2 when it is admissible.
double psi_variational_check(double u, double grid_step);

inline const std::array<const char*, kZDim> kZLabels = {
    "log_inv_excess", "log_L", "log_Lhat", "log_R", "log_Rprime", "half_log_V", "half_log_Vhat"};

// Z_n recorded at a fixed set of checkpoints n (1-based) for each replicate.
struct EmpiricalProcess {
  std::size_t n_max = 0;
  std::vector<std::size_t> checkpoints;
  std::vector<std::vector<ZVector>> values;  // [replicate][checkpoint]
  std::uint64_t truncated = 0;               // replicates dropped

  std::size_t replicates() const { return values.size(); }
  // Index of checkpoint n; throws if n was not recorded.
  std::size_t slot(std::size_t n) const;
  bool has(std::size_t n) const;
  void merge(const EmpiricalProcess& other);
};

EmpiricalProcess sample_empirical_process(const TreeParams& params, std::size_t n_max,
                                          std::vector<std::size_t> checkpoints,
                                          std::uint64_t replicates, RngStream& rng,
                                          const SamplerOptions& options = {});

struct LlnReport {
  std::size_t n_eval = 0;
  std::array<double, kZDim> mean{};
  std::array<double, kZDim> stderr_{};
  std::array<double, kZDim> mean_half{};  // at n_eval / 2, when recorded
  std::array<double, kZDim> stderr_half{};
  std::array<bool, kZDim> within{};
  std::array<bool, kZDim> shrinks{};
  bool has_half = false;
  bool pass = false;  // false for the n_eval = 1 smoke case
};

LlnReport lln_diagnostic(const EmpiricalProcess& proc, std::size_t n_eval,
                         double z_threshold = 5.0);

struct CltRow {
  double t = 0.0;
  int component = 0;
  double ks = 0.0;
};

struct CltReport {
  std::size_t N = 0;
  std::vector<CltRow> ks_rows;
  double spread = 0.0;       // E[max_c Z_c - min_c Z_c] / sqrt(N) at N
  double spread_half = 0.0;  // the same at N / 2, when recorded
  double t1 = 0.25;
  double t2 = 0.75;
  std::array<double, kZDim> increment_variance{};
  double ks_component0_t1 = 0.0;
};

CltReport clt_diagnostic(const EmpiricalProcess& proc, const std::vector<double>& t_grid,
                         double t1 = 0.25, double t2 = 0.75);

// Checkpoints clt_diagnostic needs for a given N and t grid.
std::vector<std::size_t> clt_checkpoints(std::size_t N, const std::vector<double>& t_grid,
                                         double t1 = 0.25, double t2 = 0.75);

struct LdRow {
  double u = 0.0;
  double empirical_rate = 0.0;
  double rate = 0.0;
  double gap = 0.0;
};

// -(1/n) log P(Gamma(n,1) > n u) for u > 1 (lower tail for u < 1) against phi.
std::vector<LdRow> ld_diagnostic_q(int n, const std::vector<double>& u_grid);

// Monte Carlo rate of (1/n) log L_n: for u > 1 counts {L_n >= e^{nu}}, for
// u < 1 counts {L_n <= e^{nu}}.
struct LdCounts {
  int n = 0;
  std::vector<double> u_grid;
  std::vector<std::uint64_t> hits;
  std::uint64_t trials = 0;
  void merge(const LdCounts& other);
};

LdCounts ld_length_counts(const TreeParams& params, int n, const std::vector<double>& u_grid,
                          std::uint64_t replicates, RngStream& rng);

struct LdMcRow {
  double u = 0.0;
  std::uint64_t hits = 0;
  double p_hat = 0.0;
  double empirical_rate = 0.0;
  double rate = 0.0;  // psi(u)
  double gap = 0.0;
};

std::vector<LdMcRow> ld_length_report(const LdCounts& counts);

struct TailQuadrature {
  double value = 0.0;
  double error = 0.0;
  bool converged = false;
};

// P(L_n > k) = (1/(k (n-1)!)) int_0^k (1 - g(y/k))^k (log k - log y)^{n-1} dy
// with g = delta o invert_theta.
TailQuadrature ln_tail_quadrature(const TreeParams& params, int n, std::uint64_t k);

// E[(1 - g(U))^k] for uniform U, i.e. P(L_1 > k) by a second route.
TailQuadrature l1_tail_direct(const TreeParams& params, std::uint64_t k);

enum class TailQuantity { kR, kV, kLhat, kVhat, kRprime, kL };

TailQuantity parse_tail_quantity(const std::string& name);
std::string tail_quantity_name(TailQuantity q);

struct TailCounts {
  TailQuantity quantity = TailQuantity::kV;
  int n = 1;
  std::vector<std::uint64_t> k_grid;
  std::vector<std::uint64_t> hits;
  std::uint64_t trials = 0;
  std::uint64_t truncated = 0;
  std::uint64_t censored = 0;
  void merge(const TailCounts& other);
};

TailCounts tail_counts(const TreeParams& params, TailQuantity quantity, int n,
                       const std::vector<std::uint64_t>& k_grid, std::uint64_t replicates,
                       RngStream& rng);

struct TailRow {
  std::uint64_t k = 0;
  std::uint64_t hits = 0;
  double p_hat = 0.0;
  double stderr_ = 0.0;
  double compensated = 0.0;
  double compensated_stderr = 0.0;
  bool usable = false;
};

struct TailReport {
  TailQuantity quantity = TailQuantity::kV;
  int n = 1;
  std::vector<TailRow> rows;
  std::uint64_t trials = 0;
  std::uint64_t truncated = 0;
  double max_min_ratio = 0.0;
  bool bounded = false;
  // Asymptotic constant 2 sigma / ((sigma-1) (n-1)!) for L and Lhat.
  double limit = 0.0;
  double limit_gap = 0.0;  // relative, at the largest usable k
  bool pass = false;
};

TailReport summarize_tail(const TreeParams& params, const TailCounts& counts,
                          double ratio_bound = 3.0, double limit_tolerance = 0.15,
                          std::uint64_t min_hits = 100);

TailReport tail_constant_estimate(const TreeParams& params, TailQuantity quantity, int n,
                                  const std::vector<std::uint64_t>& k_grid,
                                  std::uint64_t replicates, RngStream& rng);

}  // namespace pondsim

#endif  // PONDSIM_STATS_HPP_
