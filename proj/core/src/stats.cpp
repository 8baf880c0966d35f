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

#include "pondsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "pondsim/outlet_chain.hpp"

namespace pondsim {

double rate_phi(double u) {
  if (!(u > 0.0)) throw std::invalid_argument("phi needs u > 0");
  return u - std::log(u) - 1.0;
}

double rate_psi(double u) {
  if (!(u >= 0.0)) throw std::invalid_argument("psi needs u >= 0");
  if (u <= 0.5) return std::numbers::ln2 - u;
  return rate_phi(u);
}

double psi_variational_check(double u, double grid_step) {
  if (!(u >= 0.0)) throw std::invalid_argument("psi needs u >= 0");
  if (!(grid_step > 0.0 && grid_step <= 1e-4)) {
    throw std::invalid_argument("grid_step must lie in (0, 1e-4]");
  }
  const double lo = std::max(u, 1e-6);
  const double hi = u + 10.0;
  auto objective = [u](double v) { return rate_phi(v) + v - u; };
  double best = objective(lo);
  const auto points = static_cast<std::size_t>(std::ceil((hi - lo) / grid_step));
  for (std::size_t i = 1; i <= points; ++i) {
    best = std::min(best, objective(std::min(hi, lo + static_cast<double>(i) * grid_step)));
  }
  if (0.5 >= lo) best = std::min(best, objective(0.5));
  return best;
}

std::size_t EmpiricalProcess::slot(std::size_t n) const {
  const auto it = std::lower_bound(checkpoints.begin(), checkpoints.end(), n);
  if (it == checkpoints.end() || *it != n) {
    throw std::invalid_argument("n = " + std::to_string(n) + " was not recorded");
  }
  return static_cast<std::size_t>(it - checkpoints.begin());
}

bool EmpiricalProcess::has(std::size_t n) const {
  return std::binary_search(checkpoints.begin(), checkpoints.end(), n);
}

void EmpiricalProcess::merge(const EmpiricalProcess& other) {
  if (other.checkpoints != checkpoints || other.n_max != n_max) {
    throw std::invalid_argument("incompatible processes");
  }
  values.insert(values.end(), other.values.begin(), other.values.end());
  truncated += other.truncated;
}

EmpiricalProcess sample_empirical_process(const TreeParams& params, std::size_t n_max,
                                          std::vector<std::size_t> checkpoints,
                                          std::uint64_t replicates, RngStream& rng,
                                          const SamplerOptions& options) {
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  if (checkpoints.empty() || checkpoints.front() < 1 || checkpoints.back() > n_max) {
    throw std::invalid_argument("checkpoints must lie in [1, n_max]");
  }
  EmpiricalProcess proc;
  proc.n_max = n_max;
  proc.checkpoints = checkpoints;
  proc.values.reserve(replicates);
  for (std::uint64_t r = 0; r < replicates; ++r) {
    const PondChainSample s = sample_pond_chain(params, n_max, rng, options);
    if (s.truncated) {
      ++proc.truncated;
      continue;
    }
    std::vector<ZVector> row;
    row.reserve(checkpoints.size());
    for (std::size_t n : checkpoints) row.push_back(s.Z[n - 1]);
    proc.values.push_back(std::move(row));
  }
  return proc;
}

LlnReport lln_diagnostic(const EmpiricalProcess& proc, std::size_t n_eval, double z_threshold) {
  if (proc.replicates() == 0) throw std::invalid_argument("empty process");
  LlnReport rep;
  rep.n_eval = n_eval;
  auto stats_at = [&](std::size_t n, std::array<double, kZDim>& mean,
                      std::array<double, kZDim>& se) {
    const std::size_t s = proc.slot(n);
    for (int c = 0; c < kZDim; ++c) {
      Moments m;
      for (const auto& row : proc.values) m.add(row[s][c] / static_cast<double>(n));
      mean[c] = m.mean();
      se[c] = m.std_error();
    }
  };
  stats_at(n_eval, rep.mean, rep.stderr_);
  rep.has_half = n_eval >= 2 && proc.has(n_eval / 2);
  if (rep.has_half) stats_at(n_eval / 2, rep.mean_half, rep.stderr_half);
  bool all = n_eval > 1;
  for (int c = 0; c < kZDim; ++c) {
    rep.within[c] = std::abs(rep.mean[c] - 1.0) <= z_threshold * rep.stderr_[c];
    rep.shrinks[c] = !rep.has_half || std::abs(rep.mean[c] - 1.0) < std::abs(rep.mean_half[c] - 1.0);
    all = all && rep.within[c] && rep.shrinks[c];
  }
  rep.pass = all;
  return rep;
}

std::vector<std::size_t> clt_checkpoints(std::size_t N, const std::vector<double>& t_grid,
                                         double t1, double t2) {
  std::vector<std::size_t> out = {N, std::max<std::size_t>(1, N / 2)};
  auto at = [N](double t) {
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("t must lie in (0, 1]");
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(N * t)));
  };
  for (double t : t_grid) out.push_back(at(t));
  out.push_back(at(t1));
  out.push_back(at(t2));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CltReport clt_diagnostic(const EmpiricalProcess& proc, const std::vector<double>& t_grid,
                         double t1, double t2) {
  if (proc.replicates() == 0) throw std::invalid_argument("empty process");
  if (!(t1 > 0.0 && t1 < t2 && t2 <= 1.0)) throw std::invalid_argument("need 0 < t1 < t2 <= 1");
  CltReport rep;
  const std::size_t N = proc.n_max;
  rep.N = N;
  rep.t1 = t1;
  rep.t2 = t2;
  const double sqrt_n = std::sqrt(static_cast<double>(N));
  auto index = [N](double t) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(N * t)));
  };
  for (double t : t_grid) {
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("t must lie in (0, 1]");
    const std::size_t s = proc.slot(index(t));
    const double centre = static_cast<double>(N) * t;
    const double sd = std::sqrt(t);
    for (int c = 0; c < kZDim; ++c) {
      std::vector<double> x;
      x.reserve(proc.replicates());
      for (const auto& row : proc.values) x.push_back((row[s][c] - centre) / sqrt_n);
      const double ks = ks_statistic(std::move(x), [sd](double v) { return normal_cdf(v / sd); });
      rep.ks_rows.push_back({t, c, ks});
      if (t == 1.0 && c == 0) rep.ks_component0_t1 = ks;
    }
  }
  auto spread_at = [&](std::size_t n) {
    const std::size_t s = proc.slot(n);
    Moments m;
    for (const auto& row : proc.values) {
      const auto [lo, hi] = std::minmax_element(row[s].begin(), row[s].end());
      m.add(*hi - *lo);
    }
    return m.mean() / std::sqrt(static_cast<double>(n));
  };
  rep.spread = spread_at(N);
  if (proc.has(N / 2) && N >= 2) rep.spread_half = spread_at(N / 2);
  const std::size_t s1 = proc.slot(index(t1));
  const std::size_t s2 = proc.slot(index(t2));
  const double drift = static_cast<double>(N) * (t2 - t1);
  for (int c = 0; c < kZDim; ++c) {
    Moments m;
    for (const auto& row : proc.values) m.add((row[s2][c] - row[s1][c] - drift) / sqrt_n);
    rep.increment_variance[c] = m.variance();
  }
  return rep;
}

std::vector<LdRow> ld_diagnostic_q(int n, const std::vector<double>& u_grid) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  std::vector<LdRow> rows;
  for (double u : u_grid) {
    if (!(u > 0.0)) throw std::invalid_argument("u must be positive");
    LdRow r;
    r.u = u;
    r.rate = rate_phi(u);
    if (u != 1.0) {
      const double t = n * u;
      const double log_p = u > 1.0 ? log_gamma_q_int(n, t) : log_gamma_p_int(n, t);
      r.empirical_rate = -log_p / n;
    }
    r.gap = std::abs(r.empirical_rate - r.rate);
    rows.push_back(r);
  }
  return rows;
}

void LdCounts::merge(const LdCounts& other) {
  if (other.u_grid != u_grid || other.n != n) throw std::invalid_argument("incompatible counts");
  for (std::size_t i = 0; i < hits.size(); ++i) hits[i] += other.hits[i];
  trials += other.trials;
}

LdCounts ld_length_counts(const TreeParams& params, int n, const std::vector<double>& u_grid,
                          std::uint64_t replicates, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  LdCounts counts;
  counts.n = n;
  counts.u_grid = u_grid;
  counts.hits.assign(u_grid.size(), 0);
  SamplerOptions opt;
  opt.lengths_only = true;
  opt.asymptotic_delta = 0.0;
  for (std::uint64_t r = 0; r < replicates; ++r) {
    double x = 0.0;
    for (int i = 0; i < n; ++i) x += rng.exponential();
    const OutletState outlet = outlet_state_from_log_inv_theta(params, x);
    const PondSample pond = sample_pond(params, outlet, rng, opt);
    const double rate = pond.L.log() / n;
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
      const double u = u_grid[i];
      if ((u > 1.0 && rate >= u) || (u < 1.0 && rate <= u)) ++counts.hits[i];
    }
    ++counts.trials;
  }
  return counts;
}

std::vector<LdMcRow> ld_length_report(const LdCounts& counts) {
  std::vector<LdMcRow> rows;
  for (std::size_t i = 0; i < counts.u_grid.size(); ++i) {
    LdMcRow r;
    r.u = counts.u_grid[i];
    r.hits = counts.hits[i];
    r.p_hat = counts.trials ? static_cast<double>(r.hits) / static_cast<double>(counts.trials) : 0.0;
    r.empirical_rate = r.hits ? -std::log(r.p_hat) / counts.n
                              : std::numeric_limits<double>::infinity();
    r.rate = rate_psi(r.u);
    r.gap = std::abs(r.empirical_rate - r.rate);
    rows.push_back(r);
  }
  return rows;
}

namespace {

double g_of_theta(const TreeParams& params, double th) {
  return delta_of_q(params, invert_theta(params, th));
}

// (1 - g(th))^k in a form that survives k of order 10^7.
double survival_power(const TreeParams& params, double th, double k) {
  const double g = g_of_theta(params, th);
  if (g >= 1.0) return 0.0;
  return std::exp(k * std::log1p(-g));
}

}  // namespace

TailQuadrature ln_tail_quadrature(const TreeParams& params, int n, std::uint64_t k) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  const double kd = static_cast<double>(k);
  const double log_k = std::log(kd);
  const double rel = 1e-10;

  // (0, 1] with y = e^{-s}.
  const double s_max = 50.0 + 5.0 * n;
  std::vector<double> sb = {0.0};
  for (double s = 1.0; s < s_max; s *= 2.0) sb.push_back(s);
  sb.push_back(s_max);
  const auto near = integrate_panels(
      [&](double s) {
        return std::exp(-s) * survival_power(params, std::exp(-s) / kd, kd) *
               std::pow(log_k + s, n - 1);
      },
      sb, rel, 0.0, 20000);

  // [1, k] on dyadic panels.
  std::vector<double> yb = {1.0};
  for (double y = 2.0; y < kd; y *= 2.0) yb.push_back(y);
  yb.push_back(kd);
  QuadratureResult far;
  far.converged = true;
  if (kd > 1.0) {
    far = integrate_panels(
        [&](double y) {
          return survival_power(params, y / kd, kd) * std::pow(log_k - std::log(y), n - 1);
        },
        yb, rel, 0.0, 20000);
  }
  const double norm = kd * std::exp(std::lgamma(static_cast<double>(n)));
  TailQuadrature out;
  out.value = (near.value + far.value) / norm;
  out.error = (near.error + far.error) / norm;
  out.converged = near.converged && far.converged && out.error <= 1e-8 * out.value;
  return out;
}

TailQuadrature l1_tail_direct(const TreeParams& params, std::uint64_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const double kd = static_cast<double>(k);
  std::vector<double> b = {0.0};
  for (double u = 1.0 / kd; u < 1.0; u *= 2.0) b.push_back(u);
  b.push_back(1.0);
  const auto r =
      integrate_panels([&](double u) { return survival_power(params, u, kd); }, b, 1e-11, 0.0,
                       20000);
  return {r.value, r.error, r.converged && r.error <= 1e-8 * r.value};
}

TailQuantity parse_tail_quantity(const std::string& name) {
  if (name == "R") return TailQuantity::kR;
  if (name == "V") return TailQuantity::kV;
  if (name == "L") return TailQuantity::kL;
  if (name == "Lhat") return TailQuantity::kLhat;
  if (name == "Vhat") return TailQuantity::kVhat;
  if (name == "Rprime") return TailQuantity::kRprime;
  throw std::invalid_argument("unknown tail quantity '" + name + "'");
}

std::string tail_quantity_name(TailQuantity q) {
  switch (q) {
    case TailQuantity::kR: return "R";
    case TailQuantity::kV: return "V";
    case TailQuantity::kL: return "L";
    case TailQuantity::kLhat: return "Lhat";
    case TailQuantity::kVhat: return "Vhat";
    case TailQuantity::kRprime: return "Rprime";
  }
  return "?";
}

void TailCounts::merge(const TailCounts& other) {
  if (other.k_grid != k_grid || other.n != n || other.quantity != quantity) {
    throw std::invalid_argument("incompatible tail counts");
  }
  for (std::size_t i = 0; i < hits.size(); ++i) hits[i] += other.hits[i];
  trials += other.trials;
  truncated += other.truncated;
  censored += other.censored;
}

TailCounts tail_counts(const TreeParams& params, TailQuantity quantity, int n,
                       const std::vector<std::uint64_t>& k_grid, std::uint64_t replicates,
                       RngStream& rng) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (k_grid.empty()) throw std::invalid_argument("empty k grid");
  TailCounts counts;
  counts.quantity = quantity;
  counts.n = n;
  counts.k_grid = k_grid;
  counts.hits.assign(k_grid.size(), 0);
  const std::uint64_t k_top = *std::max_element(k_grid.begin(), k_grid.end());

  SamplerOptions opt;
  opt.asymptotic_delta = 0.0;
  switch (quantity) {
    case TailQuantity::kL:
    case TailQuantity::kLhat: opt.lengths_only = true; break;
    case TailQuantity::kV:
    case TailQuantity::kVhat: opt.volume_cap = k_top; break;
    case TailQuantity::kR:
    case TailQuantity::kRprime: opt.radius_cap = k_top; break;
  }
  const std::size_t last = static_cast<std::size_t>(n) - 1;
  for (std::uint64_t r = 0; r < replicates; ++r) {
    const PondChainSample s = sample_pond_chain(params, n, rng, opt);
    if (s.truncated) {
      ++counts.truncated;
      continue;
    }
    Count value;
    bool censored = false;
    switch (quantity) {
      case TailQuantity::kL: value = s.ponds[last].L; break;
      case TailQuantity::kLhat: value = s.Lhat[last]; break;
      case TailQuantity::kV:
        value = s.ponds[last].V;
        censored = s.ponds[last].censored;
        break;
      case TailQuantity::kR:
        value = s.ponds[last].R;
        censored = s.ponds[last].censored;
        break;
      case TailQuantity::kVhat:
        value = s.Vhat[last];
        censored = s.censored;
        break;
      case TailQuantity::kRprime:
        value = s.Rprime[last];
        censored = s.censored;
        break;
    }
    ++counts.trials;
    if (censored) ++counts.censored;
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
      if (censored || value.greater_than(static_cast<double>(k_grid[i]))) ++counts.hits[i];
    }
  }
  return counts;
}

TailReport summarize_tail(const TreeParams& params, const TailCounts& counts, double ratio_bound,
                          double limit_tolerance, std::uint64_t min_hits) {
  TailReport rep;
  rep.quantity = counts.quantity;
  rep.n = counts.n;
  rep.trials = counts.trials;
  rep.truncated = counts.truncated;
  const bool volume =
      counts.quantity == TailQuantity::kV || counts.quantity == TailQuantity::kVhat;
  const bool length =
      counts.quantity == TailQuantity::kL || counts.quantity == TailQuantity::kLhat;
  const double t = static_cast<double>(counts.trials);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  const TailRow* top = nullptr;
  for (std::size_t i = 0; i < counts.k_grid.size(); ++i) {
    TailRow row;
    row.k = counts.k_grid[i];
    row.hits = counts.hits[i];
    row.p_hat = t > 0 ? static_cast<double>(row.hits) / t : 0.0;
    row.stderr_ = t > 0 ? std::sqrt(row.p_hat * (1.0 - row.p_hat) / t) : 0.0;
    const double kd = static_cast<double>(row.k);
    const double scale =
        (volume ? std::sqrt(kd) : kd) / std::pow(std::log(kd), counts.n - 1);
    row.compensated = row.p_hat * scale;
    row.compensated_stderr = row.stderr_ * scale;
    row.usable = row.hits >= min_hits;
    if (row.usable) {
      lo = std::min(lo, row.compensated);
      hi = std::max(hi, row.compensated);
    }
    rep.rows.push_back(row);
  }
  std::size_t usable = 0;
  for (const auto& row : rep.rows) {
    if (!row.usable) continue;
    ++usable;
    if (!top || row.k > top->k) top = &row;
  }
  rep.max_min_ratio = usable ? hi / lo : std::numeric_limits<double>::infinity();
  rep.bounded = usable >= 2 && rep.max_min_ratio < ratio_bound;
  rep.pass = rep.bounded;
  if (length) {
    const int s = params.sigma();
    rep.limit = 2.0 * s / ((s - 1.0) * std::exp(std::lgamma(static_cast<double>(counts.n))));
    if (top) {
      rep.limit_gap = std::abs(top->compensated - rep.limit) / rep.limit;
      rep.pass = rep.pass && rep.limit_gap < limit_tolerance;
    } else {
      rep.pass = false;
    }
  }
  return rep;
}

TailReport tail_constant_estimate(const TreeParams& params, TailQuantity quantity, int n,
                                  const std::vector<std::uint64_t>& k_grid,
                                  std::uint64_t replicates, RngStream& rng) {
  return summarize_tail(params, tail_counts(params, quantity, n, k_grid, replicates, rng));
}

}  // namespace pondsim
