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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pondsim/percolation.hpp"
#include "pondsim_cli/config.hpp"
#include "pondsim_cli/experiments.hpp"
#include "pondsim_cli/record.hpp"

#ifndef PONDSIM_TEST_DATA_DIR
#error "PONDSIM_TEST_DATA_DIR must be defined"
#endif

namespace pondsim::cli {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pondsim_test_" + name);
  fs::remove_all(p);
  return p;
}

const Table& table(const ResultRecord& r, const std::string& name) {
  for (const auto& t : r.tables) {
    if (t.name == name) return t;
  }
  throw std::runtime_error("no table " + name);
}

TEST(Config, ParsingAndStrictness) {
  const Config c = Config::from_text("chain", "# comment\nn = 7\nreplicates=3 # trailing\n");
  Config d = c;
  d.finalize();
  EXPECT_EQ(d.get_uint("n"), 7u);
  EXPECT_EQ(d.get_uint("replicates"), 3u);
  EXPECT_EQ(d.get_int("sigma"), 2);
  EXPECT_THROW(Config::from_text("chain", "bogus = 1\n"), UsageError);
  EXPECT_THROW(Config::from_text("chain", "just words\n"), UsageError);
  EXPECT_THROW(Config("nonsense"), UsageError);
  EXPECT_THROW(Config::from_text("chain", "experiment = tails\n"), UsageError);
  for (const char* bad : {"n = 0\n", "n = -3\n", "n = abc\n", "sigma = 1\n", "threads = 0\n",
                          "ks_threshold = x\n"}) {
    Config e = Config::from_text("chain", bad);
    EXPECT_THROW(e.finalize(), UsageError) << bad;
  }
  Config sci = Config::from_text("invasion", "steps = 1e5\n");
  sci.finalize();
  EXPECT_EQ(sci.get_uint("steps"), 100000u);
  try {
    Config::from_text("defects", "kmax = 3\n");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("kmax"), std::string::npos);
  }
}

TEST(Config, RoundTripIsFixedPoint) {
  for (const auto& exp : experiment_names()) {
    Config c(exp);
    c.set("seed", "42");
    c.finalize();
    const std::string canon = c.canonical();
    Config again = Config::from_text(exp, canon);
    again.finalize();
    EXPECT_EQ(again.canonical(), canon) << exp;
    EXPECT_EQ(again.hash(), c.hash()) << exp;
  }
}

TEST(Config, HashIgnoresThreadsAndOut) {
  Config a = Config::from_text("tails", "threads = 1\nout = /tmp/a\n");
  Config b = Config::from_text("tails", "threads = 4\nout = /tmp/b\n");
  Config c = Config::from_text("tails", "seed = 2\n");
  Config d = Config::from_text("tails", "replicates = 200000.0\n");
  a.finalize();
  b.finalize();
  c.finalize();
  d.finalize();
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(a.hash(), d.hash());
  EXPECT_EQ(a.hash_hex().size(), 16u);
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Record, JsonRoundTripAndFormats) {
  ResultRecord r;
  r.experiment = "chain";
  r.config_hash = "0123456789abcdef";
  r.config = {{"n", "5"}};
  r.seed = 9;
  r.gate("g", 0.25, 0.5, "<", true, 0.01);
  r.info("i", INFINITY);
  r.tables.push_back({"t", {"a", "b"}, {{std::int64_t{-1}, 0.5}, {std::uint64_t{2}, std::string("x")}}});
  r.plots.push_back({"p", {"hello"}, {"u", "v"}, {{1.0, 2.0}}});
  const std::string j = to_json(r);
  const ResultRecord back = record_from_json(j);
  // Table rows live in their CSV files; results.json keeps only metrics.
  ResultRecord no_tables = r;
  no_tables.tables.clear();
  EXPECT_EQ(to_json(back), to_json(no_tables));
  EXPECT_NE(j.find("\"file\": \"t.csv\""), std::string::npos);
  EXPECT_EQ(back.metrics[1].value, INFINITY);
  EXPECT_EQ(to_csv(r.tables[0]), "a,b\n-1,0.5\n2,x\n");
  EXPECT_EQ(to_dat(r.plots[0]), "# hello\n# u v\n1 2\n");
  EXPECT_EQ(j.find("wall"), std::string::npos);
  EXPECT_EQ(r.exit_code(), kExitPass);
  r.gate("bad", 1, 0, "<", false);
  EXPECT_EQ(r.exit_code(), kExitGateFailure);
  r.budget_exhausted = true;
  EXPECT_EQ(r.exit_code(), kExitBudget);
}

TEST(Record, EmptyMetricsWriteNoPlots) {
  ResultRecord r;
  r.experiment = "x";
  r.plots.push_back({"p", {}, {"u"}, {{1.0}}});
  const fs::path dir = scratch("empty");
  EXPECT_TRUE(emit_plot_data(r, dir.string()).empty());
  EXPECT_FALSE(fs::exists(dir / "p.dat"));
}

TEST(Experiments, ChainMatchesGoldenFile) {
  Config c = Config::from_text("chain", "n = 5\nreplicates = 1\nseed = 1\n");
  const fs::path dir = scratch("golden");
  c.set("out", dir.string());
  std::ostringstream log;
  EXPECT_EQ(run_and_write(c, log), kExitPass);
  const std::string golden = slurp(fs::path(PONDSIM_TEST_DATA_DIR) / "golden_chain_n5_seed1.csv");
  EXPECT_EQ(slurp(dir / "chain.csv"), golden);

  // The golden values also satisfy the sigma = 2 closed form.
  std::istringstream in(golden);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<double> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(std::stod(cell));
    const double th = std::exp(-f[4]);
    EXPECT_NEAR(f[2], (1 - std::sqrt(1 - th)) / th, 1e-12);
    EXPECT_NEAR(f[3], 2 * f[2] - 1, 1e-12);
  }
}

TEST(Experiments, ReproducibleResultsJson) {
  const std::string cfg = "n = 3\nreplicates = 3000\nmin_ks_replicates = 100\nks_n = 1,2\n"
                          "shard_size = 500\n";
  std::string first;
  for (const char* threads : {"1", "1", "3"}) {
    Config c = Config::from_text("chain", cfg);
    const fs::path dir = scratch(std::string("repro") + threads);
    c.set("out", dir.string());
    c.set("threads", threads);
    std::ostringstream log;
    run_and_write(c, log);
    const std::string json = slurp(dir / "results.json");
    if (first.empty()) first = json;
    EXPECT_EQ(json, first) << threads;
  }
}

TEST(Experiments, TailCountersThreadIndependent) {
  const std::string cfg =
      "quantities = L,V\nn = 1\nk_grid = 10,100\nquadrature_k = 100\nreplicates = 4000\n"
      "length_replicates = 20000\nshard_size = 1000\nmin_hits = 10\n";
  std::string first;
  for (const char* threads : {"1", "2", "4"}) {
    Config c = Config::from_text("tails", cfg);
    c.set("threads", threads);
    const ResultRecord r = run_experiment(c);
    const std::string csv = to_csv(table(r, "tails"));
    if (first.empty()) first = csv;
    EXPECT_EQ(csv, first) << threads;
    EXPECT_EQ(r.threads, static_cast<unsigned>(std::stoi(threads)));
  }
}

TEST(Experiments, DefectsOutputs) {
  Config c = Config::from_text("defects", "k_max = 100000\nk_grid = 100,1000,10000,100000\n");
  const fs::path dir = scratch("defects");
  c.set("out", dir.string());
  std::ostringstream log;
  EXPECT_EQ(run_and_write(c, log), kExitPass) << log.str();
  const std::string csv = slurp(dir / "defects.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,n,F,compensated");
  const std::string dat = slurp(dir / "defects_scaling_n1.dat");
  EXPECT_NE(dat.find("fitted slope"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "results.json"));
  EXPECT_TRUE(fs::exists(dir / "summary.txt"));
}

TEST(Experiments, RateOverlayHasFourColumns) {
  Config c = Config::from_text("ldp", "l_replicates = 20000\nl_u = 0.7,1.3\nl_n = 10\n");
  const fs::path dir = scratch("ldp");
  c.set("out", dir.string());
  std::ostringstream log;
  run_and_write(c, log);
  for (const char* f : {"rate_overlay_L.dat", "rate_overlay_Q.dat"}) {
    std::istringstream in(slurp(dir / f));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line[0], '#');
    std::getline(in, line);
    EXPECT_EQ(line, "# u phi psi empirical");
    std::getline(in, line);
    std::istringstream row(line);
    int cols = 0;
    std::string tok;
    while (row >> tok) ++cols;
    EXPECT_EQ(cols, 4);
  }
}

TEST(Experiments, CltHistogramHasNormalColumn) {
  Config c = Config::from_text("lln-clt", "n = 20\nreplicates = 300\n");
  const ResultRecord r = run_experiment(c);
  bool found = false;
  for (const auto& p : r.plots) {
    if (p.name != "clt_hist_component0") continue;
    found = true;
    EXPECT_EQ(p.columns.back(), "normal_density");
  }
  EXPECT_TRUE(found);
}

TEST(Experiments, InvasionAndReport) {
  const fs::path dir = scratch("inv");
  Config c = Config::from_text("invasion", "steps = 20000\nreplicates = 2\ndump_trace = 1\n"
                                           "window_start = 1000\n");
  c.set("out", (dir / "a").string());
  std::ostringstream log;
  EXPECT_EQ(run_and_write(c, log), kExitPass) << log.str();
  const std::string trace = slurp(dir / "a" / "trace.csv");
  EXPECT_EQ(trace.substr(0, trace.find('\n')), "step,depth,weight");
  Config rep = Config::from_text("report", "inputs = " + (dir / "a").string() + "\n");
  rep.set("out", (dir / "r").string());
  EXPECT_EQ(run_and_write(rep, log), kExitPass);
  Config missing = Config::from_text("report", "inputs = " + (dir / "nope").string() + "\n");
  EXPECT_THROW(run_experiment(missing), UsageError);
}

TEST(Experiments, BudgetExhaustionFlags) {
  Config c = Config::from_text("invasion", "steps = 100000\nmemory_budget = 10000\n");
  const ResultRecord r = run_experiment(c);
  EXPECT_TRUE(r.budget_exhausted);
  EXPECT_EQ(r.exit_code(), kExitBudget);
}

TEST(Experiments, CrossValidateAbortIsUsageError) {
  Config c = Config::from_text("cross-validate",
                               "replicates = 50\nsteps = 40\nponds = 3\nreference_factor = 1\n"
                               "drift_replicates = 0\n");
  EXPECT_THROW(run_experiment(c), UsageError);
}

}  // namespace
}  // namespace pondsim::cli
