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

#include "pondsim_cli/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <tuple>

#include "pondsim/defects.hpp"
#include "pondsim/invasion.hpp"
#include "pondsim/numerics.hpp"
#include "pondsim/outlet_chain.hpp"
#include "pondsim/parallel.hpp"
#include "pondsim/pond_sampler.hpp"
#include "pondsim/stats.hpp"

namespace pondsim::cli {
namespace {

// Stream-id bases keeping the arms of one experiment on disjoint streams.
constexpr std::uint64_t kArmStride = std::uint64_t{1} << 40;

struct Ctx {
  const Config& cfg;
  TreeParams params;
  std::uint64_t seed;
  unsigned threads;
  ResultRecord& rec;

  ShardPlan plan(std::uint64_t replicates) const {
    return make_shard_plan(replicates, cfg.get_uint("shard_size"));
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt_index(const std::string& base, std::uint64_t i) {
  return base + std::to_string(i);
}

// Empirical CDF against a reference CDF on an even grid, for plotting.
PlotData cdf_plot(const std::string& name, std::vector<double> sample,
                  const std::function<double(double)>& ref, double lo, double hi,
                  const std::string& comment) {
  std::sort(sample.begin(), sample.end());
  PlotData p;
  p.name = name;
  p.comments = {comment};
  p.columns = {"x", "empirical_cdf", "reference_cdf"};
  const int points = 200;
  for (int i = 0; i <= points; ++i) {
    const double x = lo + (hi - lo) * i / points;
    const double f = static_cast<double>(std::upper_bound(sample.begin(), sample.end(), x) -
                                         sample.begin()) /
                     static_cast<double>(sample.size());
    p.rows.push_back({x, f, ref(x)});
  }
  return p;
}

double empirical_cdf(const std::vector<double>& sorted, double x) {
  return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) /
         static_cast<double>(sorted.size());
}

// ---------------------------------------------------------------- chain

void run_chain(Ctx& c) {
  const std::uint64_t n = c.cfg.get_uint("n");
  const std::uint64_t reps = c.cfg.get_uint("replicates");
  const std::uint64_t max_rows = c.cfg.get_uint("max_rows");
  std::vector<std::uint64_t> ks_n;
  for (auto k : c.cfg.get_uint_list("ks_n")) {
    if (k <= n) ks_n.push_back(k);
  }
  struct Shard {
    std::vector<std::vector<double>> x;
    std::vector<std::vector<Cell>> rows;
    std::uint64_t violations = 0;
  };
  const ShardPlan plan = c.plan(reps);
  auto shards = run_shards(plan, c.seed, c.threads, [&](std::uint64_t i, std::uint64_t size,
                                                          RngStream& rng) {
    Shard s;
    s.x.resize(ks_n.size());
    for (std::uint64_t j = 0; j < size; ++j) {
      const OutletChain chain = sample_outlet_chain(c.params, n, rng);
      for (std::size_t t = 0; t + 1 < chain.size(); ++t) {
        if (!(chain.log_inv_theta[t + 1] > chain.log_inv_theta[t]) ||
            chain.q[t + 1] > chain.q[t] || chain.q[t] < c.params.p_c()) {
          ++s.violations;
        }
      }
      for (std::size_t t = 0; t < ks_n.size(); ++t) {
        s.x[t].push_back(chain.log_inv_theta[ks_n[t] - 1]);
      }
      const std::uint64_t global = plan.start(i) + j;
      if (global < max_rows) {
        for (std::size_t t = 0; t < chain.size(); ++t) {
          s.rows.push_back({global, static_cast<std::uint64_t>(t + 1), chain.q[t], chain.delta[t],
                            chain.log_inv_theta[t], chain.log_excess[t], chain.log_delta[t]});
        }
      }
    }
    return s;
  });
  Table table{"chain", {"replicate", "pond", "q", "delta", "log_inv_theta", "log_excess",
                        "log_delta"}, {}};
  std::vector<std::vector<double>> x(ks_n.size());
  std::uint64_t violations = 0;
  for (auto& s : shards) {
    table.rows.insert(table.rows.end(), s.rows.begin(), s.rows.end());
    for (std::size_t t = 0; t < ks_n.size(); ++t) x[t].insert(x[t].end(), s.x[t].begin(), s.x[t].end());
    violations += s.violations;
  }
  c.rec.tables.push_back(std::move(table));
  c.rec.gate("monotonicity_violations", static_cast<double>(violations), 0, "==", violations == 0);
  if (reps >= c.cfg.get_uint("min_ks_replicates")) {
    const double thr = c.cfg.get_real("ks_threshold");
    for (std::size_t t = 0; t < ks_n.size(); ++t) {
      const int k = static_cast<int>(ks_n[t]);
      auto cdf = [k](double v) { return v <= 0 ? 0.0 : gamma_p_int(k, v); };
      const double ks = ks_statistic(x[t], cdf);
      c.rec.gate(fmt_index("ks_gamma_n", ks_n[t]), ks, thr, "<", ks < thr);
      const double hi = *std::max_element(x[t].begin(), x[t].end());
      c.rec.plots.push_back(cdf_plot(fmt_index("gamma_cdf_n", ks_n[t]), x[t], cdf, 0.0, hi,
                                     "log(1/theta(Q_n)) against the Gamma(n,1) CDF, n = " +
                                         std::to_string(k)));
    }
  } else {
    c.rec.info("replicates", static_cast<double>(reps));
  }
}

// ------------------------------------------------------------- invasion

void run_invasion_experiment(Ctx& c) {
  const std::uint64_t steps = c.cfg.get_uint("steps");
  const std::uint64_t reps = c.cfg.get_uint("replicates");
  ExtractOptions ex;
  ex.safety_fraction = c.cfg.get_real("safety_fraction");
  ex.margin_factor = c.cfg.get_real("margin_factor");
  if (!(ex.safety_fraction >= 0.0 && ex.safety_fraction < 1.0)) {
    throw UsageError("invalid value for key 'safety_fraction': must lie in [0, 1)");
  }
  InvasionOptions io;
  io.memory_budget_bytes = c.cfg.get_uint("memory_budget");
  const bool dump = c.cfg.get_uint("dump_trace") != 0;
  const std::uint64_t window_start = c.cfg.get_uint("window_start");
  const double level = c.params.p_c() + c.cfg.get_real("critical_excess");

  struct Shard {
    std::vector<std::vector<Cell>> ponds;
    std::vector<std::vector<Cell>> trace;
    std::uint64_t above = 0;
    std::uint64_t window = 0;
    std::uint64_t ties = 0;
    std::uint64_t invalid = 0;
    std::uint64_t non_monotone = 0;
    Moments certified;
  };
  const ShardPlan plan = c.plan(reps);
  auto shards = run_shards(plan, c.seed, c.threads, [&](std::uint64_t i, std::uint64_t size,
                                                          RngStream& rng) {
    Shard s;
    for (std::uint64_t j = 0; j < size; ++j) {
      const std::uint64_t global = plan.start(i) + j;
      const InvasionTrace trace = run_invasion(c.params, steps, rng, io);
      s.ties += trace.ties;
      if (!trace.valid) {
        ++s.invalid;
        continue;
      }
      for (std::uint64_t t = window_start; t < trace.steps.size(); ++t) {
        ++s.window;
        if (trace.steps[t].weight > level) ++s.above;
      }
      if (dump && global == 0) {
        for (std::size_t t = 0; t < trace.steps.size(); ++t) {
          s.trace.push_back({static_cast<std::uint64_t>(t + 1),
                             static_cast<std::uint64_t>(trace.steps[t].depth),
                             trace.steps[t].weight});
        }
      }
      const PondDecomposition d = extract_ponds(trace, ex);
      for (std::size_t k = 0; k < d.outlets.size(); ++k) {
        if (k > 0 && !(d.outlets[k].weight < d.outlets[k - 1].weight)) ++s.non_monotone;
        const PondStats& p = d.pond_stats[k];
        s.ponds.push_back({global, static_cast<std::uint64_t>(k + 1), d.outlets[k].step, p.q, p.L,
                           p.R, p.V, static_cast<std::uint64_t>(d.outlets[k].certified)});
      }
      s.certified.add(static_cast<double>(d.certified_count));
    }
    return s;
  });
  Table ponds{"ponds", {"replicate", "pond", "outlet_step", "q", "L", "R", "V", "certified"}, {}};
  Table trace{"trace", {"step", "depth", "weight"}, {}};
  std::uint64_t above = 0, window = 0, ties = 0, invalid = 0, non_monotone = 0;
  Moments certified;
  for (auto& s : shards) {
    ponds.rows.insert(ponds.rows.end(), s.ponds.begin(), s.ponds.end());
    trace.rows.insert(trace.rows.end(), s.trace.begin(), s.trace.end());
    above += s.above;
    window += s.window;
    ties += s.ties;
    invalid += s.invalid;
    non_monotone += s.non_monotone;
    certified.merge(s.certified);
  }
  c.rec.tables.push_back(std::move(ponds));
  if (dump) c.rec.tables.push_back(std::move(trace));
  c.rec.gate("outlet_monotonicity_violations", static_cast<double>(non_monotone), 0, "==",
             non_monotone == 0);
  if (window > 0) {
    const double frac = static_cast<double>(above) / static_cast<double>(window);
    const double thr = c.cfg.get_real("fraction_threshold");
    c.rec.gate("fraction_above_pc_plus_excess", frac, thr, "<", frac < thr);
  }
  c.rec.info("ties", static_cast<double>(ties));
  c.rec.info("mean_certified_ponds", certified.mean(), certified.std_error());
  if (invalid > 0) {
    c.rec.budget_exhausted = true;
    c.rec.warnings.push_back(std::to_string(invalid) + " traces exceeded the memory budget");
  }
}

// ------------------------------------------------------- cross-validate

FirstPondSet sharded_invasion(Ctx& c, const CrossValidationConfig& cv, std::uint64_t reps,
                              std::uint64_t arm) {
  auto shards = run_shards(
      c.plan(reps), c.seed, c.threads,
      [&](std::uint64_t, std::uint64_t size, RngStream& rng) {
        return collect_invasion_ponds(c.params, cv, size, rng);
      },
      arm * kArmStride);
  FirstPondSet set = shards.front();
  for (std::size_t i = 1; i < shards.size(); ++i) set.merge(shards[i]);
  return set;
}

void run_cross_validate(Ctx& c) {
  CrossValidationConfig cv;
  cv.replicates = c.cfg.get_uint("replicates");
  cv.steps = c.cfg.get_uint("steps");
  cv.ponds_to_compare = c.cfg.get_uint("ponds");
  cv.extract.safety_fraction = c.cfg.get_real("safety_fraction");
  cv.extract.margin_factor = c.cfg.get_real("margin_factor");
  cv.reference_factor = c.cfg.get_uint("reference_factor");
  cv.volume_mean_cap = c.cfg.get_real("volume_mean_cap");
  cv.ks_threshold = c.cfg.get_real("ks_threshold");
  cv.mean_gap_threshold = c.cfg.get_real("mean_gap_threshold");
  cv.abort_fraction = c.cfg.get_real("abort_fraction");
  if (!(cv.extract.safety_fraction >= 0.0 && cv.extract.safety_fraction < 1.0)) {
    throw UsageError("invalid value for key 'safety_fraction': must lie in [0, 1)");
  }

  const FirstPondSet inv = sharded_invasion(c, cv, cv.replicates, 0);
  auto ref_shards = run_shards(
      c.plan(cv.replicates * cv.reference_factor), c.seed, c.threads,
      [&](std::uint64_t, std::uint64_t size, RngStream& rng) {
        return collect_structural_ponds(c.params, cv, size, rng);
      },
      1 * kArmStride);
  FirstPondSet ref = ref_shards.front();
  for (std::size_t i = 1; i < ref_shards.size(); ++i) ref.merge(ref_shards[i]);

  CrossValidationReport report;
  try {
    report = compare_first_ponds(inv, ref, cv);
  } catch (const ConfigurationError& e) {
    throw UsageError(e.what());
  }
  for (const auto& m : report.metrics) {
    if (m.gated) {
      c.rec.gate(m.name, m.value, m.threshold, "<", m.pass, m.stderr_);
    } else {
      c.rec.info(m.name, m.value, m.stderr_);
    }
  }
  for (std::size_t i = 0; i < report.certified_fraction.size(); ++i) {
    c.rec.info(fmt_index("certified_fraction_", i + 1), report.certified_fraction[i]);
  }
  c.rec.info("ties", static_cast<double>(report.ties));

  Table samples{"first_ponds", {"engine", "pond", "q", "L", "R", "V"}, {}};
  for (std::size_t i = 0; i < inv.ponds; ++i) {
    for (std::size_t r = 0; r < inv.q[i].size(); ++r) {
      samples.rows.push_back({std::string("invasion"), static_cast<std::uint64_t>(i + 1),
                              inv.q[i][r], inv.L[i][r], inv.R[i][r], inv.V[i][r]});
    }
  }
  c.rec.tables.push_back(std::move(samples));

  std::vector<double> ref_sorted = ref.q[0];
  std::sort(ref_sorted.begin(), ref_sorted.end());
  c.rec.plots.push_back(cdf_plot(
      "xval_Q1_cdf", inv.q[0], [&](double x) { return empirical_cdf(ref_sorted, x); },
      c.params.p_c(), 1.0, "certified Q_1 from invasion against the structural sampler"));

  const std::uint64_t drift_reps = c.cfg.get_uint("drift_replicates");
  if (drift_reps > 0) {
    CrossValidationConfig cv2 = cv;
    cv2.steps = c.cfg.get_uint("drift_steps");
    const FirstPondSet inv2 = sharded_invasion(c, cv2, drift_reps, 2);
    const double alpha = c.cfg.get_real("drift_alpha");
    for (std::size_t i = 0; i < inv.ponds; ++i) {
      const std::string tag = std::to_string(i + 1);
      for (auto [name, a, b] : {std::tuple{"Q", &inv.q[i], &inv2.q[i]},
                                std::tuple{"L", &inv.L[i], &inv2.L[i]}}) {
        if (a->empty() || b->empty()) continue;
        const double ks = ks_two_sample(*a, *b);
        const double crit = ks_two_sample_critical(a->size(), b->size(), alpha);
        c.rec.gate(std::string("drift_ks_") + name + "_" + tag, ks, crit, "<", ks < crit);
      }
      Moments ma, mb;
      for (double v : inv.V[i]) ma.add(std::min(v, cv.volume_mean_cap));
      for (double v : inv2.V[i]) mb.add(std::min(v, cv.volume_mean_cap));
      const double se = std::hypot(ma.std_error(), mb.std_error());
      const double z = se > 0 ? std::abs(ma.mean() - mb.mean()) / se : 0.0;
      c.rec.gate("drift_z_truncated_mean_V_" + tag, z, 4.0, "<", z < 4.0);
      c.rec.info("drift_certified_fraction_" + tag,
                 1.0 - static_cast<double>(inv2.missing[i]) / static_cast<double>(inv2.replicates));
    }
  }
}

// -------------------------------------------------------------- defects

double parse_probability(const Config& cfg, const TreeParams& params) {
  const std::string s = cfg.get_string("p");
  if (s == "pc") return params.p_c();
  double p = 0.0;
  try {
    std::size_t used = 0;
    p = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
  } catch (const std::exception&) {
    throw UsageError("invalid value '" + s + "' for key 'p': expected a probability or pc");
  }
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("invalid value '" + s + "' for key 'p'");
  return p;
}

void run_defects(Ctx& c) {
  const std::size_t k_max = c.cfg.get_uint("k_max");
  const std::size_t n_max = c.cfg.get_uint("n_max");
  const double p = parse_probability(c.cfg, c.params);
  std::vector<std::size_t> grid;
  for (auto k : c.cfg.get_uint_list("k_grid")) {
    if (k > k_max) throw UsageError("k_grid entry " + std::to_string(k) + " exceeds k_max");
    grid.push_back(k);
  }
  const DefectProfile prof = defect_reach_dp(c.params, p, k_max, n_max);
  Table table{"defects", {"k", "n", "F", "compensated"}, {}};
  for (std::size_t n = 0; n <= n_max; ++n) {
    for (const auto& [k, comp] : defect_scaling_diagnostic(prof, n, grid)) {
      table.rows.push_back({static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(n),
                            prof.F(k, n), comp});
    }
  }
  c.rec.tables.push_back(std::move(table));

  const bool critical = p == c.params.p_c();
  const int sigma = c.params.sigma();
  if (critical) {
    const std::size_t lk = c.cfg.get_uint("limit_k");
    if (lk <= k_max) {
      const double limit = 2.0 * sigma / (sigma - 1.0);
      const double v = static_cast<double>(lk) * prof.F(lk, 0);
      const double tol = c.cfg.get_real("limit_tolerance") * limit;
      c.rec.gate("k_times_F0_at_" + std::to_string(lk), v, tol, "in", std::abs(v - limit) <= tol);
    }
    const double bound = c.cfg.get_real("ratio_bound");
    for (std::size_t n = 1; n <= n_max; ++n) {
      const auto comp = defect_scaling_diagnostic(prof, n, grid);
      double lo = INFINITY, hi = 0.0;
      for (const auto& [k, v] : comp) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      c.rec.gate(fmt_index("compensated_ratio_n", n), hi / lo, bound, "<", hi / lo < bound);
    }
  }
  if (sigma == 2 && p == 0.5) {
    const std::size_t bk = 3, bn = 2;
    const DefectProfile small = defect_reach_dp(c.params, p, bk, bn);
    const auto counts = defect_brute_force_counts(2, bk, bn);
    const double total = std::ldexp(1.0, 14);
    std::uint64_t mismatches = 0;
    for (std::size_t k = 0; k <= bk; ++k) {
      for (std::size_t j = 0; j <= bn; ++j) {
        if (small.F(k, j) != static_cast<double>(counts[k][j]) / total) ++mismatches;
      }
    }
    c.rec.gate("brute_force_mismatches", static_cast<double>(mismatches), 0, "==",
               mismatches == 0);
  }
  const std::uint64_t mc_reps = c.cfg.get_uint("mc_reps");
  if (mc_reps > 0) {
    const double z_max = c.cfg.get_real("mc_z");
    std::uint64_t arm = 0;
    for (auto k : c.cfg.get_uint_list("mc_k")) {
      if (k > k_max) throw UsageError("mc_k entry exceeds k_max");
      for (std::size_t n = 0; n <= std::min<std::size_t>(n_max, 2); ++n, ++arm) {
        const std::uint64_t budget = c.cfg.get_uint("work_budget");
        auto shards = run_shards(
            c.plan(mc_reps), c.seed, c.threads,
            [&](std::uint64_t, std::uint64_t size, RngStream& rng) {
              return defect_reach_mc(c.params, p, k, n, size, rng, budget);
            },
            arm * kArmStride);
        std::uint64_t hits = 0, trials = 0;
        for (const auto& s : shards) {
          hits += s.hits;
          trials += s.trials;
          if (s.budget_exhausted) c.rec.budget_exhausted = true;
        }
        const double exact = prof.F(k, n);
        const double est = static_cast<double>(hits) / static_cast<double>(trials);
        const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(trials));
        const double z = se > 0 ? std::abs(est - exact) / se : (est == exact ? 0.0 : INFINITY);
        c.rec.gate("mc_z_k" + std::to_string(k) + "_n" + std::to_string(n), z, z_max, "<=",
                   z <= z_max, se);
      }
    }
  }
  for (std::size_t n = 0; n <= n_max; ++n) {
    PlotData plot;
    plot.name = fmt_index("defects_scaling_n", n);
    plot.columns = {"log_k", "log_F"};
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (double lk = 1.0; lk <= std::log10(static_cast<double>(k_max)) + 1e-9; lk += 0.05) {
      const auto k = static_cast<std::size_t>(std::llround(std::pow(10.0, lk)));
      if (k > k_max || prof.F(k, n) <= 0.0) continue;
      const double x = std::log(static_cast<double>(k));
      const double y = std::log(prof.F(k, n));
      plot.rows.push_back({x, y});
      if (k >= 100) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
      }
    }
    const double slope = m > 1 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : NAN;
    plot.comments = {"log F[k][n] against log k, n = " + std::to_string(n),
                     "fitted slope (k >= 100) " + format_real(slope) + ", nominal " +
                         format_real(-std::ldexp(1.0, -static_cast<int>(n)))};
    c.rec.plots.push_back(std::move(plot));
  }
}

// ---------------------------------------------------------------- tails

void run_tails(Ctx& c) {
  std::vector<TailQuantity> quantities;
  for (const auto& q : split_list(c.cfg.get_string("quantities"))) {
    try {
      quantities.push_back(parse_tail_quantity(q));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  const auto n_list = c.cfg.get_uint_list("n");
  const auto k_grid = c.cfg.get_uint_list("k_grid");
  const auto quad_k = c.cfg.get_uint_list("quadrature_k");
  for (auto k : quad_k) {
    if (k < 2) throw UsageError("quadrature_k entries must be >= 2");
  }
  const int sigma = c.params.sigma();
  const double limit1 = 2.0 * sigma / (sigma - 1.0);

  // Exact quadrature for P(L_n > k).
  Table qt{"quadrature", {"n", "k", "p", "compensated", "error", "converged"}, {}};
  std::map<std::pair<std::uint64_t, std::uint64_t>, double> quad;
  for (auto n : n_list) {
    for (auto k : quad_k) {
      const TailQuadrature r = ln_tail_quadrature(c.params, static_cast<int>(n), k);
      const double kd = static_cast<double>(k);
      const double comp = r.value * kd / std::pow(std::log(kd), static_cast<double>(n) - 1.0);
      qt.rows.push_back({n, k, r.value, comp, r.error, static_cast<std::uint64_t>(r.converged)});
      quad[{n, k}] = r.value;
      c.rec.gate("quadrature_converged_n" + std::to_string(n) + "_k" + std::to_string(k),
                 r.converged ? 1.0 : 0.0, 1.0, "==", r.converged);
    }
    // Compensated value against its limit at the largest k.
    const std::uint64_t k = *std::max_element(quad_k.begin(), quad_k.end());
    const double kd = static_cast<double>(k);
    const double limit = limit1 / std::exp(std::lgamma(static_cast<double>(n)));
    const double comp = quad[{n, k}] * kd / std::pow(std::log(kd), static_cast<double>(n) - 1.0);
    const double tol = n == 1 ? c.cfg.get_real("quadrature_limit_tolerance") : 0.2;
    c.rec.gate("quadrature_ratio_to_limit_n" + std::to_string(n) + "_k" + std::to_string(k),
               comp / limit, tol, "in |x-1|", std::abs(comp / limit - 1.0) <= tol);
  }
  c.rec.tables.push_back(std::move(qt));

  Table tt{"tails",
           {"quantity", "n", "k", "hits", "trials", "p_hat", "stderr", "compensated",
            "compensated_stderr", "usable"},
           {}};
  std::uint64_t arm = 0;
  for (TailQuantity q : quantities) {
    const bool length = q == TailQuantity::kL || q == TailQuantity::kLhat;
    std::vector<std::uint64_t> grid = k_grid;
    if (q == TailQuantity::kL) grid.insert(grid.end(), quad_k.begin(), quad_k.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const std::uint64_t reps =
        length ? c.cfg.get_uint("length_replicates") : c.cfg.get_uint("replicates");
    for (auto n : n_list) {
      auto shards = run_shards(
          c.plan(reps), c.seed, c.threads,
          [&](std::uint64_t, std::uint64_t size, RngStream& rng) {
            return tail_counts(c.params, q, static_cast<int>(n), grid, size, rng);
          },
          (arm++) * kArmStride);
      TailCounts counts = shards.front();
      for (std::size_t i = 1; i < shards.size(); ++i) counts.merge(shards[i]);
      if (counts.truncated > 0) c.rec.budget_exhausted = true;
      const TailReport rep =
          summarize_tail(c.params, counts, c.cfg.get_real("ratio_bound"),
                         c.cfg.get_real("limit_tolerance"), c.cfg.get_uint("min_hits"));
      const std::string tag = tail_quantity_name(q) + "_n" + std::to_string(n);
      PlotData plot;
      plot.name = "tail_" + tag;
      plot.comments = {"compensated tail of " + tail_quantity_name(q) + ", n = " +
                       std::to_string(n)};
      plot.columns = {"k", "compensated", "stderr"};
      for (const auto& row : rep.rows) {
        tt.rows.push_back({tail_quantity_name(q), n, row.k, row.hits, counts.trials, row.p_hat,
                           row.stderr_, row.compensated, row.compensated_stderr,
                           static_cast<std::uint64_t>(row.usable)});
        if (row.usable) plot.rows.push_back({static_cast<double>(row.k), row.compensated,
                                             row.compensated_stderr});
      }
      c.rec.plots.push_back(std::move(plot));
      // Only the k_grid points enter the ratio check.
      double lo = INFINITY, hi = 0.0;
      std::size_t usable = 0;
      for (const auto& row : rep.rows) {
        if (!row.usable || std::find(k_grid.begin(), k_grid.end(), row.k) == k_grid.end()) continue;
        lo = std::min(lo, row.compensated);
        hi = std::max(hi, row.compensated);
        ++usable;
      }
      const double ratio = usable ? hi / lo : INFINITY;
      const double bound = c.cfg.get_real("ratio_bound");
      c.rec.gate("compensated_ratio_" + tag, ratio, bound, "<", usable >= 2 && ratio < bound);
      if (q == TailQuantity::kLhat) {
        c.rec.gate("limit_gap_" + tag, rep.limit_gap, c.cfg.get_real("limit_tolerance"), "<",
                   rep.limit_gap < c.cfg.get_real("limit_tolerance"));
      }
      if (q == TailQuantity::kL) {
        const double z_max = c.cfg.get_real("mc_z");
        for (const auto& row : rep.rows) {
          const auto it = quad.find({n, row.k});
          if (it == quad.end()) continue;
          const double se = std::sqrt(it->second * (1.0 - it->second) /
                                      static_cast<double>(counts.trials));
          const double z = std::abs(row.p_hat - it->second) / se;
          c.rec.gate("mc_vs_quadrature_z_" + tag + "_k" + std::to_string(row.k), z, z_max, "<=",
                     z <= z_max, se);
        }
      }
      c.rec.info("censored_" + tag, static_cast<double>(counts.censored));
      c.rec.info("truncated_" + tag, static_cast<double>(counts.truncated));
    }
  }
  c.rec.tables.push_back(std::move(tt));
}

// -------------------------------------------------------------- lln-clt

void run_lln_clt(Ctx& c) {
  const std::size_t N = c.cfg.get_uint("n");
  const std::uint64_t reps = c.cfg.get_uint("replicates");
  const auto t_grid = c.cfg.get_real_list("t_grid");
  const double t1 = c.cfg.get_real("increment_t1");
  const double t2 = c.cfg.get_real("increment_t2");
  if (!(t1 < t2 && t2 <= 1.0)) throw UsageError("need increment_t1 < increment_t2 <= 1");
  for (double t : t_grid) {
    if (t > 1.0) throw UsageError("t_grid entries must lie in (0, 1]");
  }
  SamplerOptions opt;
  opt.asymptotic_delta = c.cfg.get_real("asymptotic_delta");
  opt.work_budget = c.cfg.get_uint("work_budget");
  const auto checkpoints = clt_checkpoints(N, t_grid, t1, t2);
  auto shards = run_shards(c.plan(reps), c.seed, c.threads,
                           [&](std::uint64_t, std::uint64_t size, RngStream& rng) {
                             return sample_empirical_process(c.params, N, checkpoints, size, rng,
                                                             opt);
                           });
  EmpiricalProcess proc = shards.front();
  for (std::size_t i = 1; i < shards.size(); ++i) proc.merge(shards[i]);
  if (proc.truncated > 0) {
    c.rec.budget_exhausted = true;
    c.rec.warnings.push_back(std::to_string(proc.truncated) + " replicates truncated");
  }

  const LlnReport lln = lln_diagnostic(proc, N, c.cfg.get_real("z_threshold"));
  Table lt{"lln",
           {"component", "label", "n", "mean", "stderr", "mean_half", "stderr_half", "within",
            "shrinks"},
           {}};
  for (int k = 0; k < kZDim; ++k) {
    lt.rows.push_back({static_cast<std::int64_t>(k), std::string(kZLabels[k]),
                       static_cast<std::uint64_t>(N), lln.mean[k], lln.stderr_[k],
                       lln.mean_half[k], lln.stderr_half[k],
                       static_cast<std::uint64_t>(lln.within[k]),
                       static_cast<std::uint64_t>(lln.shrinks[k])});
    const std::string label = kZLabels[k];
    const double z = std::abs(lln.mean[k] - 1.0) / lln.stderr_[k];
    c.rec.gate("lln_z_" + label, z, c.cfg.get_real("z_threshold"), "<=", lln.within[k],
               lln.stderr_[k]);
    if (lln.has_half) {
      c.rec.gate("lln_shrink_" + label, std::abs(lln.mean[k] - 1.0),
                 std::abs(lln.mean_half[k] - 1.0), "<", lln.shrinks[k]);
    }
  }
  c.rec.tables.push_back(std::move(lt));

  const CltReport clt = clt_diagnostic(proc, t_grid, t1, t2);
  Table ct{"clt_ks", {"t", "component", "label", "ks"}, {}};
  for (const auto& row : clt.ks_rows) {
    ct.rows.push_back({row.t, static_cast<std::int64_t>(row.component),
                       std::string(kZLabels[row.component]), row.ks});
  }
  c.rec.tables.push_back(std::move(ct));
  const double ks_thr = c.cfg.get_real("ks_threshold");
  if (std::find(t_grid.begin(), t_grid.end(), 1.0) != t_grid.end()) {
    c.rec.gate("clt_ks_component0_t1", clt.ks_component0_t1, ks_thr, "<",
               clt.ks_component0_t1 < ks_thr);
  }
  c.rec.info("clt_spread", clt.spread);
  c.rec.gate("clt_spread_decreases", clt.spread, clt.spread_half, "<", clt.spread < clt.spread_half);
  Table it{"increments", {"component", "label", "variance", "target"}, {}};
  const double target = t2 - t1;
  const double tol = c.cfg.get_real("increment_tolerance");
  for (int k = 0; k < kZDim; ++k) {
    it.rows.push_back({static_cast<std::int64_t>(k), std::string(kZLabels[k]),
                       clt.increment_variance[k], target});
    const double rel = std::abs(clt.increment_variance[k] / target - 1.0);
    c.rec.gate(std::string("increment_variance_rel_gap_") + kZLabels[k], rel, tol, "<", rel < tol);
  }
  c.rec.tables.push_back(std::move(it));

  // Histogram of the standardized component 0 at t = 1.
  const std::size_t bins = c.cfg.get_uint("hist_bins");
  const double lo = -4.0, hi = 4.0, width = (hi - lo) / static_cast<double>(bins);
  std::vector<double> counts(bins, 0.0);
  const std::size_t slot = proc.slot(N);
  const double sqrt_n = std::sqrt(static_cast<double>(N));
  for (const auto& row : proc.values) {
    const double x = (row[slot][0] - static_cast<double>(N)) / sqrt_n;
    if (x < lo || x >= hi) continue;
    counts[static_cast<std::size_t>((x - lo) / width)] += 1.0;
  }
  PlotData hist;
  hist.name = "clt_hist_component0";
  hist.comments = {"standardized (Z_N[0] - N) / sqrt(N), N = " + std::to_string(N)};
  hist.columns = {"x", "density", "normal_density"};
  for (std::size_t b = 0; b < bins; ++b) {
    const double x = lo + (static_cast<double>(b) + 0.5) * width;
    hist.rows.push_back({x, counts[b] / (static_cast<double>(proc.replicates()) * width),
                         std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi)});
  }
  c.rec.plots.push_back(std::move(hist));
}

// ------------------------------------------------------------------ ldp

void run_ldp(Ctx& c) {
  const auto q_n = c.cfg.get_uint_list("q_n");
  const auto q_u = c.cfg.get_real_list("q_u");
  const double q_tol = c.cfg.get_real("q_tolerance");
  Table qt{"ldp_q", {"n", "u", "empirical_rate", "phi", "gap"}, {}};
  std::map<double, double> previous;
  for (std::size_t i = 0; i < q_n.size(); ++i) {
    const int n = static_cast<int>(q_n[i]);
    for (const auto& row : ld_diagnostic_q(n, q_u)) {
      qt.rows.push_back({static_cast<std::uint64_t>(n), row.u, row.empirical_rate, row.rate, row.gap});
      const std::string tag = "_n" + std::to_string(n) + "_u" + format_real(row.u);
      if (i == 0) {
        c.rec.gate("ldp_q_gap" + tag, row.gap, q_tol, "<", row.gap < q_tol);
      } else {
        c.rec.gate("ldp_q_gap_shrinks" + tag, row.gap, previous[row.u], "<",
                   row.gap < previous[row.u]);
      }
      previous[row.u] = row.gap;
    }
  }
  c.rec.tables.push_back(std::move(qt));

  Table pt{"psi_check", {"u", "psi", "variational", "abs_diff"}, {}};
  const double step = c.cfg.get_real("psi_u_step");
  const double u_max = c.cfg.get_real("psi_u_max");
  const double grid_step = c.cfg.get_real("grid_step");
  double worst = 0.0;
  for (int i = 0; i * step <= u_max + 1e-9; ++i) {
    const double u = i * step;
    const double a = rate_psi(u);
    const double b = psi_variational_check(u, grid_step);
    worst = std::max(worst, std::abs(a - b));
    pt.rows.push_back({u, a, b, std::abs(a - b)});
  }
  c.rec.tables.push_back(std::move(pt));
  const double psi_tol = c.cfg.get_real("psi_tolerance");
  c.rec.gate("psi_variational_max_abs_diff", worst, psi_tol, "<", worst < psi_tol);

  const int l_n = static_cast<int>(c.cfg.get_uint("l_n"));
  const auto l_u = c.cfg.get_real_list("l_u");
  auto shards = run_shards(c.plan(c.cfg.get_uint("l_replicates")), c.seed, c.threads,
                           [&](std::uint64_t, std::uint64_t size, RngStream& rng) {
                             return ld_length_counts(c.params, l_n, l_u, size, rng);
                           });
  LdCounts counts = shards.front();
  for (std::size_t i = 1; i < shards.size(); ++i) counts.merge(shards[i]);
  Table lt{"ldp_length", {"n", "u", "hits", "trials", "p_hat", "empirical_rate", "psi", "gap"}, {}};
  PlotData overlay;
  overlay.name = "rate_overlay_L";
  overlay.comments = {"rate of (1/n) log L_n, n = " + std::to_string(l_n)};
  overlay.columns = {"u", "phi", "psi", "empirical"};
  const double l_tol = c.cfg.get_real("l_tolerance");
  for (const auto& row : ld_length_report(counts)) {
    lt.rows.push_back({static_cast<std::uint64_t>(l_n), row.u, row.hits, counts.trials, row.p_hat,
                       row.empirical_rate, row.rate, row.gap});
    overlay.rows.push_back({row.u, rate_phi(row.u), row.rate, row.empirical_rate});
    c.rec.gate("ldp_length_gap_u" + format_real(row.u), row.gap, l_tol, "<", row.gap < l_tol);
  }
  c.rec.tables.push_back(std::move(lt));
  c.rec.plots.push_back(std::move(overlay));

  PlotData qo;
  qo.name = "rate_overlay_Q";
  const int n_last = static_cast<int>(q_n.back());
  qo.comments = {"exact rate of (1/n) log 1/theta(Q_n), n = " + std::to_string(n_last)};
  qo.columns = {"u", "phi", "psi", "empirical"};
  std::vector<double> dense;
  for (double u = 0.1; u <= 3.0 + 1e-9; u += 0.1) {
    if (std::abs(u - 1.0) > 1e-9) dense.push_back(u);
  }
  for (const auto& row : ld_diagnostic_q(n_last, dense)) {
    qo.rows.push_back({row.u, row.rate, rate_psi(row.u), row.empirical_rate});
  }
  c.rec.plots.push_back(std::move(qo));
}

// --------------------------------------------------------------- report

void run_report(Ctx& c) {
  const auto inputs = split_list(c.cfg.get_string("inputs"));
  if (inputs.empty()) throw UsageError("report needs inputs=dir1,dir2,...");
  Table t{"report", {"input", "experiment", "config_hash", "metric", "value", "threshold",
                     "gated", "pass"}, {}};
  for (const auto& dir : inputs) {
    const auto path = std::filesystem::path(dir) / "results.json";
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    ResultRecord r;
    try {
      r = record_from_json(ss.str());
    } catch (const std::exception& e) {
      throw UsageError("malformed " + path.string() + ": " + e.what());
    }
    for (const auto& m : r.metrics) {
      t.rows.push_back({dir, r.experiment, r.config_hash, m.name, m.value, m.threshold,
                        static_cast<std::uint64_t>(m.gated), static_cast<std::uint64_t>(m.pass)});
    }
    c.rec.gate("input_pass_" + r.experiment + "_" + r.config_hash, r.all_pass() ? 1.0 : 0.0, 1.0,
               "==", r.all_pass());
    if (r.budget_exhausted) c.rec.budget_exhausted = true;
  }
  c.rec.tables.push_back(std::move(t));
}

}  // namespace

ResultRecord run_experiment(Config config) {
  config.finalize();
  const auto start = std::chrono::steady_clock::now();
  ResultRecord rec;
  rec.experiment = config.experiment();
  rec.config = config.canonical_map();
  rec.config_hash = config.hash_hex();
  rec.seed = config.get_uint("seed");
  const std::string threads = config.get_string("threads");
  rec.threads = resolve_threads(threads == "auto" ? 0 : std::stoi(threads));
  Ctx ctx{config, TreeParams(static_cast<int>(config.get_int("sigma"))), rec.seed, rec.threads,
          rec};
  const std::string& e = rec.experiment;
  if (e == "chain") {
    run_chain(ctx);
  } else if (e == "invasion") {
    run_invasion_experiment(ctx);
  } else if (e == "cross-validate") {
    run_cross_validate(ctx);
  } else if (e == "defects") {
    run_defects(ctx);
  } else if (e == "tails") {
    run_tails(ctx);
  } else if (e == "lln-clt") {
    run_lln_clt(ctx);
  } else if (e == "ldp") {
    run_ldp(ctx);
  } else if (e == "report") {
    run_report(ctx);
  } else {
    throw UsageError("unknown experiment '" + e + "'");
  }
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

int run_and_write(Config config, std::ostream& log) {
  config.finalize();
  const std::string out = config.get_string("out");
  const ResultRecord rec = run_experiment(std::move(config));
  write_record(rec, out);
  emit_plot_data(rec, out);
  log << summary_text(rec);
  return rec.exit_code();
}

}  // namespace pondsim::cli
