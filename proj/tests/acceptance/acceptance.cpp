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

// Acceptance driver. `acceptance --criterion N` evaluates one criterion and
// prints a single "PASS"/"FAIL" verdict line for it, preceded by detail lines.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pondsim/defects.hpp"
#include "pondsim/numerics.hpp"
#include "pondsim/parallel.hpp"
#include "pondsim/percolation.hpp"
#include "pondsim/pond_sampler.hpp"
#include "pondsim/rng.hpp"
#include "pondsim/stats.hpp"
#include "pondsim_cli/config.hpp"
#include "pondsim_cli/experiments.hpp"
#include "pondsim_cli/record.hpp"

namespace {

using namespace pondsim;
using namespace pondsim::cli;

struct Check {
  std::string name;
  double value;
  std::string bound;
  bool pass;
};

struct Verdict {
  std::vector<Check> checks;
  void add(std::string name, double value, std::string bound, bool pass) {
    checks.push_back({std::move(name), value, std::move(bound), pass});
  }
  bool pass() const {
    return !checks.empty() &&
           std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

unsigned g_threads = 0;

ResultRecord run(const std::string& experiment, const std::string& text) {
  Config c = Config::from_text(experiment, text);
  if (g_threads > 0) c.set("threads", std::to_string(g_threads));
  return run_experiment(c);
}

// Copies gated metrics whose names start with one of the prefixes.
int take_gates(Verdict& v, const ResultRecord& r, const std::vector<std::string>& prefixes) {
  int n = 0;
  for (const auto& m : r.metrics) {
    if (!m.gated) continue;
    const bool wanted = std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) {
      return m.name.rfind(p, 0) == 0;
    });
    if (!wanted) continue;
    v.add(m.name, m.value, m.comparison + " " + format_real(m.threshold), m.pass);
    ++n;
  }
  return n;
}

void require_gates(Verdict& v, const ResultRecord& r, const std::vector<std::string>& prefixes,
                   int expected) {
  const int n = take_gates(v, r, prefixes);
  v.add("gate_count", n, "== " + std::to_string(expected), n == expected);
  if (r.budget_exhausted) v.add("budget_exhausted", 1, "== 0", false);
}

// ------------------------------------------------------------------ 1

Verdict criterion1() {
  Verdict v;
  const TreeParams tp(2);
  const int grid = 1000;
  double worst_theta = 0, worst_delta = 0, worst_sub = 0;
  for (int i = 1; i <= grid; ++i) {
    const double p = 0.5 + 0.5 * i / grid;
    worst_theta = std::max(worst_theta, std::abs(theta_generic(tp, p) - (2 * p - 1) / (p * p)));
  }
  for (int i = 0; i < grid; ++i) {
    const double q = 0.5 + 0.5 * i / (grid - 1);
    // Generic backbone parameter 1 - sigma Q (1 - Q theta(Q))^(sigma - 1).
    const double th = theta_generic(tp, q);
    const double generic = 1.0 - 2.0 * q * (1.0 - q * th);
    worst_delta = std::max(worst_delta, std::abs(generic - (2 * q - 1)));
    worst_delta = std::max(worst_delta, std::abs(delta_from_theta(tp, th) - (2 * q - 1)));
    worst_sub = std::max(worst_sub, std::abs(tp.p_c() * (1.0 - generic) - (1 - q)));
    worst_sub = std::max(worst_sub, std::abs(subcritical_param(tp, q) - (1 - q)));
  }
  v.add("max_abs_err_theta", worst_theta, "< 1e-10", worst_theta < 1e-10);
  v.add("max_abs_err_delta", worst_delta, "< 1e-10", worst_delta < 1e-10);
  v.add("max_abs_err_subcritical", worst_sub, "< 1e-10", worst_sub < 1e-10);
  return v;
}

// ------------------------------------------------------------------ 2

Verdict criterion2() {
  Verdict v;
  const ResultRecord r = run("chain", "n = 10\nreplicates = 100000\nks_n = 1,2,5,10\n");
  require_gates(v, r, {"ks_gamma_"}, 4);
  return v;
}

// ------------------------------------------------------------------ 3

Verdict criterion3() {
  Verdict v;
  const ResultRecord r = run("cross-validate", "replicates = 10000\nsteps = 100000\n"
                                               "drift_steps = 1000000\n");
  for (const auto& m : r.metrics) {
    if (m.gated) v.add(m.name, m.value, m.comparison + " " + format_real(m.threshold), m.pass);
  }
  const int ks = std::count_if(v.checks.begin(), v.checks.end(),
                               [](const Check& c) { return c.name.rfind("ks_", 0) == 0; });
  v.add("ks_gate_count", ks, ">= 2", ks >= 2);
  if (r.budget_exhausted) v.add("budget_exhausted", 1, "== 0", false);
  return v;
}

// ------------------------------------------------------------------ 4

Verdict criterion4() {
  Verdict v;
  const TreeParams tp(2);
  const std::uint64_t samples = 1000000;
  const auto plan = make_shard_plan(samples, 50000);
  struct Out {
    std::uint64_t violations = 0;
    std::uint64_t n = 0;
  };
  const auto shards = run_shards(plan, 20260401, resolve_threads(static_cast<int>(g_threads)),
                                 [&](std::uint64_t, std::uint64_t size, RngStream& rng) {
    Out o;
    for (std::uint64_t i = 0; i < size; ++i) {
      const double u = rng.uniform();
      const double q = 0.52 + 0.4 * u;
      const std::uint64_t L = sample_backbone_length(delta_of_q(tp, q), rng);
      const WalkMode mode = (i % 2 == 0) ? WalkMode::kStepwise : WalkMode::kBatched;
      const WalkResult w = excursion_walk_volume(tp, q, L, rng, mode);
      if (w.T != 2 * w.V - L) ++o.violations;
      ++o.n;
    }
    return o;
  });
  Out total;
  for (const auto& s : shards) {
    total.violations += s.violations;
    total.n += s.n;
  }
  v.add("samples", total.n, "== 1e6", total.n == samples);
  v.add("violations", total.violations, "== 0", total.violations == 0);
  return v;
}

// ------------------------------------------------------------------ 5

Verdict criterion5() {
  Verdict v;
  const ResultRecord r = run("lln-clt", "n = 400\nreplicates = 10000\n");
  require_gates(v, r, {"lln_z_", "lln_shrink_"}, 2 * kZDim);
  return v;
}

// ------------------------------------------------------------------ 6

Verdict criterion6() {
  Verdict v;
  const TreeParams tp(2);
  const std::size_t N = 1600, n0 = 400;
  const std::uint64_t reps = 10000;
  const std::vector<std::size_t> checkpoints = {n0, N / 4, 3 * N / 4, N};
  SamplerOptions opt;
  opt.asymptotic_delta = 1e-3;
  opt.work_budget = 100000000;
  const auto shards = run_shards(make_shard_plan(reps, 250), 6, resolve_threads(g_threads),
                                 [&](std::uint64_t, std::uint64_t size, RngStream& rng) {
                                   return sample_empirical_process(tp, N, checkpoints, size, rng,
                                                                   opt);
                                 });
  EmpiricalProcess proc = shards.front();
  for (std::size_t i = 1; i < shards.size(); ++i) proc.merge(shards[i]);
  v.add("truncated", proc.truncated, "== 0", proc.truncated == 0);

  // Component 0 at N = 400, standardized.
  const std::size_t s0 = proc.slot(n0);
  std::vector<double> x;
  for (const auto& row : proc.values) {
    x.push_back((row[s0][0] - static_cast<double>(n0)) / std::sqrt(static_cast<double>(n0)));
  }
  const double ks = ks_statistic(x, [](double t) { return normal_cdf(t); });
  v.add("ks_component0_N400", ks, "< 0.03", ks < 0.03);

  auto spread = [&](std::size_t n) {
    const std::size_t s = proc.slot(n);
    Moments m;
    for (const auto& row : proc.values) {
      const auto [lo, hi] = std::minmax_element(row[s].begin(), row[s].end());
      m.add(*hi - *lo);
    }
    return m.mean() / std::sqrt(static_cast<double>(n));
  };
  const double sp400 = spread(n0), sp1600 = spread(N);
  v.add("spread_N400", sp400, "info", true);
  v.add("spread_N1600", sp1600, "< spread_N400", sp1600 < sp400);

  const CltReport clt = clt_diagnostic(proc, {1.0}, 0.25, 0.75);
  for (int c = 0; c < kZDim; ++c) {
    const double rel = std::abs(clt.increment_variance[c] / 0.5 - 1.0);
    v.add(std::string("increment_variance_rel_gap_") + kZLabels[c], rel, "< 0.1", rel < 0.1);
  }
  return v;
}

// ------------------------------------------------------------------ 7

Verdict criterion7() {
  Verdict v;
  const auto a = ld_diagnostic_q(100, {0.5, 2.0});
  const auto b = ld_diagnostic_q(400, {0.5, 2.0});
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string u = format_real(a[i].u);
    v.add("gap_n100_u" + u, a[i].gap, "< 0.05", a[i].gap < 0.05);
    v.add("gap_n400_u" + u, b[i].gap, "< gap_n100", b[i].gap < a[i].gap);
  }
  return v;
}

// ------------------------------------------------------------------ 8

Verdict criterion8() {
  Verdict v;
  std::string u_list;
  for (int i = 1; i <= 60; ++i) {
    const double u = i / 20.0;
    if (u != 1.0 && std::abs(u - 1.0) > 1e-9 && 30.0 * rate_psi(u) <= 10.0) {
      u_list += (u_list.empty() ? "" : ",") + format_real(u);
    }
  }
  std::cout << "  u grid (30 psi(u) <= 10): " << u_list << "\n";
  const ResultRecord r =
      run("ldp", "l_n = 30\nl_replicates = 10000000\nl_u = " + u_list + "\n");
  take_gates(v, r, {"psi_variational_max_abs_diff", "ldp_length_gap_"});
  const int n = std::count_if(v.checks.begin(), v.checks.end(), [](const Check& c) {
    return c.name.rfind("ldp_length_gap_", 0) == 0;
  });
  v.add("length_gate_count", n, ">= 2", n >= 2);
  return v;
}

// ------------------------------------------------------------------ 9

Verdict criterion9() {
  Verdict v;
  const TreeParams tp(2);
  const TailQuadrature q4 = ln_tail_quadrature(tp, 1, 10000);
  const double scaled = 1e4 * q4.value;
  v.add("k_times_tail_L1_k1e4", scaled, "in [3.8, 4.2]",
        q4.converged && scaled >= 3.8 && scaled <= 4.2);
  const ResultRecord r = run("tails",
                             "quantities = L,V\nn = 1,2\nk_grid = 1000,10000,100000\n"
                             "quadrature_k = 100,10000\nlength_replicates = 10000000\n");
  int z = 0;
  for (const auto& m : r.metrics) {
    if (m.gated && m.name == "mc_vs_quadrature_z_L_n1_k100") {
      v.add(m.name, m.value, m.comparison + " " + format_real(m.threshold), m.pass);
      ++z;
    }
  }
  const int c = take_gates(v, r, {"compensated_ratio_V_n"});
  v.add("gate_count", z + c, "== 3", z + c == 3);
  if (r.budget_exhausted) v.add("budget_exhausted", 1, "== 0", false);
  return v;
}

// ------------------------------------------------------------------ 10

Verdict criterion10() {
  Verdict v;
  const ResultRecord r = run("defects", "n_max = 3\nk_max = 1000000\n"
                                        "k_grid = 100,1000,10000,100000,1000000\n");
  take_gates(v, r, {"brute_force", "k_times_F0", "compensated_ratio_n"});
  // Dyadic, hence exact in binary floating point.
  const double f20 = defect_reach_dp(TreeParams(2), 0.5, 3, 2).F(2, 0);
  v.add("F_2_0_minus_39_over_64", f20 - 39.0 / 64.0, "== 0", f20 == 39.0 / 64.0);
  const int n = std::count_if(v.checks.begin(), v.checks.end(), [](const Check& c) {
    return c.name.rfind("compensated_ratio_n", 0) == 0;
  });
  v.add("ratio_gate_count", n, "== 3", n == 3);
  return v;
}

// ------------------------------------------------------------------ 11

std::string results_json(const std::string& experiment, const std::string& text,
                         const std::string& threads, const std::string& tag) {
  Config c = Config::from_text(experiment, text);
  c.set("threads", threads);
  const auto dir = std::filesystem::temp_directory_path() / ("pondsim_acceptance_" + tag);
  std::filesystem::remove_all(dir);
  c.set("out", dir.string());
  std::ostringstream log;
  run_and_write(c, log);
  std::ifstream in(dir / "results.json", std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict criterion11() {
  Verdict v;
  const std::map<std::string, std::string> configs = {
      {"chain", "n = 10\nreplicates = 20000\n"},
      {"invasion", "steps = 50000\nreplicates = 4\n"},
      {"tails", "quantities = L,V\nn = 1,2\nreplicates = 20000\nlength_replicates = 200000\n"
                "k_grid = 10,100,1000\nquadrature_k = 100\n"},
      {"lln-clt", "n = 50\nreplicates = 400\n"},
  };
  for (const auto& [exp, text] : configs) {
    const std::string a = results_json(exp, text, "1", exp + "_a");
    const std::string b = results_json(exp, text, "1", exp + "_b");
    v.add("byte_identical_" + exp, a == b && !a.empty(), "== 1", a == b && !a.empty());
  }
  const std::string tail_cfg = configs.at("tails") + "shard_size = 5000\n";
  std::string reference;
  for (const char* t : {"1", "2", "3", "8"}) {
    Config c = Config::from_text("tails", tail_cfg);
    c.set("threads", t);
    const ResultRecord r = run_experiment(c);
    std::string counters;
    for (const auto& tab : r.tables) {
      if (tab.name == "tails") counters = to_csv(tab);
    }
    if (reference.empty()) reference = counters;
    const bool same = !counters.empty() && counters == reference;
    v.add(std::string("tail_counters_threads_") + t, same, "== 1", same);
  }
  return v;
}

struct Spec {
  Verdict (*fn)();
  const char* title;
  double budget_seconds;
};

const std::map<int, Spec> kCriteria = {
    {1, {criterion1, "closed-form conformance", 1}},
    {2, {criterion2, "gamma representation", 60}},
    {3, {criterion3, "engine cross-validation", 1800}},
    {4, {criterion4, "volume identity", 60}},
    {5, {criterion5, "law of large numbers", 600}},
    {6, {criterion6, "central limit theorem", 1200}},
    {7, {criterion7, "large deviations of Q (exact)", 1}},
    {8, {criterion8, "psi consistency and length LDP", 1800}},
    {9, {criterion9, "fixed-pond tails", 3600}},
    {10, {criterion10, "defects", 60}},
    {11, {criterion11, "determinism", 0}},
};

bool evaluate(int id, bool enforce_runtime) {
  const Spec& s = kCriteria.at(id);
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = s.fn();
  } catch (const std::exception& e) {
    v.add(std::string("exception: ") + e.what(), 0, "none", false);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (s.budget_seconds > 0) {
    v.add("runtime_seconds", secs, "< " + format_real(s.budget_seconds),
          !enforce_runtime || secs < s.budget_seconds);
  }
  for (const auto& c : v.checks) {
    std::cout << "  " << (c.pass ? "ok   " : "FAIL ") << c.name << " = " << format_real(c.value)
              << " (" << c.bound << ")\n";
  }
  std::cout << (v.pass() ? "PASS" : "FAIL") << " criterion " << id << ": " << s.title << " ["
            << std::fixed << std::setprecision(1) << secs << " s]\n"
            << std::defaultfloat << std::flush;
  return v.pass();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pondsim acceptance checks"};
  std::vector<int> ids;
  bool no_runtime = false;
  app.add_option("--criterion,-c", ids, "criterion number (1-11); repeatable")
      ->check(CLI::Range(1, 11));
  app.add_option("--threads", g_threads, "worker threads (0 = all cores)");
  app.add_flag("--no-runtime", no_runtime, "do not gate on the runtime budgets");
  CLI11_PARSE(app, argc, argv);
  if (ids.empty()) {
    for (const auto& [id, s] : kCriteria) ids.push_back(id);
  }
  bool all = true;
  for (int id : ids) all = evaluate(id, !no_runtime) && all;
  return all ? 0 : 1;
}
