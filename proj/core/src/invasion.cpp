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

#include "pondsim/invasion.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "pondsim/numerics.hpp"

namespace pondsim {
namespace {

struct BoundaryEdge {
  double weight;
  std::uint64_t seq;
  std::int64_t parent;
  std::uint32_t depth;
  std::uint8_t child;
};

struct HeavierFirst {
  bool operator()(const BoundaryEdge& a, const BoundaryEdge& b) const {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.seq > b.seq;
  }
};

double truncated_mean(const std::vector<double>& v, double cap, double* se) {
  Moments m;
  for (double x : v) m.add(std::min(x, cap));
  *se = m.std_error();
  return m.mean();
}

}  // namespace

InvasionTrace run_invasion(const TreeParams& params, std::uint64_t steps, RngStream& rng,
                           const InvasionOptions& options) {
  if (steps == 0) throw std::invalid_argument("steps must be >= 1");
  InvasionTrace trace;
  trace.params = params;
  trace.steps.reserve(steps);
  const int sigma = params.sigma();

  std::vector<BoundaryEdge> storage;
  storage.reserve(static_cast<std::size_t>(steps) * (sigma - 1) + sigma + 1);
  std::priority_queue<BoundaryEdge, std::vector<BoundaryEdge>, HeavierFirst> heap(
      HeavierFirst{}, std::move(storage));
  std::uint64_t seq = 0;
  auto expose = [&](std::int64_t parent, std::uint32_t depth) {
    for (int c = 0; c < sigma; ++c) {
      const double w = rng.uniform();
      heap.push({w, seq++, parent, depth, static_cast<std::uint8_t>(c)});
      if (options.record_exposed) trace.exposed.push_back({parent, static_cast<std::uint8_t>(c), w});
    }
  };
  expose(-1, 1);

  for (std::uint64_t i = 0; i < steps; ++i) {
    const std::uint64_t bytes =
        heap.size() * sizeof(BoundaryEdge) + trace.steps.size() * sizeof(InvasionStep);
    if (bytes > options.memory_budget_bytes) {
      trace.valid = false;
      break;
    }
    const BoundaryEdge e = heap.top();
    heap.pop();
    if (!heap.empty() && heap.top().weight == e.weight) ++trace.ties;
    trace.steps.push_back({e.weight, e.depth, e.parent, e.child});
    expose(static_cast<std::int64_t>(i), e.depth + 1);
  }
  return trace;
}

EdgeId edge_id(const InvasionTrace& trace, std::size_t step) {
  EdgeId id;
  std::int64_t s = static_cast<std::int64_t>(step);
  while (s >= 0) {
    const InvasionStep& st = trace.steps.at(static_cast<std::size_t>(s));
    id.path.push_back(st.child);
    s = st.parent;
  }
  std::reverse(id.path.begin(), id.path.end());
  return id;
}

PondDecomposition extract_ponds(const TreeParams& params, const std::vector<double>& weights,
                                const std::vector<std::uint32_t>& depths,
                                const ExtractOptions& options) {
  if (!(options.safety_fraction >= 0.0 && options.safety_fraction < 1.0)) {
    throw std::invalid_argument("safety_fraction must lie in [0, 1)");
  }
  if (!depths.empty() && depths.size() != weights.size()) {
    throw std::invalid_argument("depth record length mismatch");
  }
  PondDecomposition d;
  const std::size_t n = weights.size();
  if (n == 0) return d;
  const double pc = params.p_c();

  std::vector<std::size_t> positions;
  double later_max = -1.0;
  for (std::size_t i = n; i-- > 0;) {
    if (weights[i] > later_max) {
      if (weights[i] > pc) positions.push_back(i);
      later_max = weights[i];
    }
  }
  std::reverse(positions.begin(), positions.end());

  double tail_max = -1.0;
  for (std::size_t i = (3 * n) / 4; i < n; ++i) tail_max = std::max(tail_max, weights[i]);
  const double window = (1.0 - options.safety_fraction) * static_cast<double>(n);

  bool certified = true;
  std::size_t begin = 0;
  std::uint32_t base_depth = 0;
  for (std::size_t pos : positions) {
    Outlet o;
    o.step = pos + 1;
    o.weight = weights[pos];
    o.depth = depths.empty() ? 0 : depths[pos];
    certified = certified && static_cast<double>(o.step) <= window;
    if (options.margin_factor > 0.0) {
      certified = certified && (o.weight - pc) > options.margin_factor * (tail_max - pc);
    }
    o.certified = certified;
    if (certified) ++d.certified_count;

    PondStats s;
    s.q = o.weight;
    s.V = pos + 1 - begin;
    if (!depths.empty()) {
      s.L = o.depth - base_depth;
      std::uint32_t top = base_depth;
      for (std::size_t i = begin; i <= pos; ++i) top = std::max(top, depths[i]);
      s.R = top - base_depth;
      base_depth = o.depth;
    }
    d.outlets.push_back(o);
    d.pond_stats.push_back(s);
    begin = pos + 1;
  }
  return d;
}

PondDecomposition extract_ponds(const InvasionTrace& trace, const ExtractOptions& options) {
  if (!trace.valid) throw std::invalid_argument("cannot decompose an invalid trace");
  std::vector<double> w(trace.steps.size());
  std::vector<std::uint32_t> depth(trace.steps.size());
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    w[i] = trace.steps[i].weight;
    depth[i] = trace.steps[i].depth;
  }
  return extract_ponds(trace.params, w, depth, options);
}

void FirstPondSet::merge(const FirstPondSet& other) {
  if (other.ponds != ponds) throw std::invalid_argument("pond count mismatch in merge");
  replicates += other.replicates;
  ties += other.ties;
  for (std::size_t i = 0; i < ponds; ++i) {
    missing[i] += other.missing[i];
    q[i].insert(q[i].end(), other.q[i].begin(), other.q[i].end());
    L[i].insert(L[i].end(), other.L[i].begin(), other.L[i].end());
    R[i].insert(R[i].end(), other.R[i].begin(), other.R[i].end());
    V[i].insert(V[i].end(), other.V[i].begin(), other.V[i].end());
  }
}

namespace {

FirstPondSet empty_set(std::size_t k) {
  if (k == 0) throw std::invalid_argument("ponds_to_compare must be >= 1");
  FirstPondSet s;
  s.ponds = k;
  s.missing.assign(k, 0);
  s.q.resize(k);
  s.L.resize(k);
  s.R.resize(k);
  s.V.resize(k);
  return s;
}

}  // namespace

FirstPondSet collect_invasion_ponds(const TreeParams& params, const CrossValidationConfig& config,
                                    std::uint64_t replicates, RngStream& rng) {
  FirstPondSet set = empty_set(config.ponds_to_compare);
  for (std::uint64_t r = 0; r < replicates; ++r) {
    const InvasionTrace trace = run_invasion(params, config.steps, rng);
    set.ties += trace.ties;
    ++set.replicates;
    if (!trace.valid) {
      for (auto& m : set.missing) ++m;
      continue;
    }
    const PondDecomposition d = extract_ponds(trace, config.extract);
    for (std::size_t i = 0; i < set.ponds; ++i) {
      if (i >= d.certified_count) {
        ++set.missing[i];
        continue;
      }
      const PondStats& s = d.pond_stats[i];
      set.q[i].push_back(s.q);
      set.L[i].push_back(static_cast<double>(s.L));
      set.R[i].push_back(static_cast<double>(s.R));
      set.V[i].push_back(static_cast<double>(s.V));
    }
  }
  return set;
}

FirstPondSet collect_structural_ponds(const TreeParams& params,
                                      const CrossValidationConfig& config,
                                      std::uint64_t replicates, RngStream& rng) {
  FirstPondSet set = empty_set(config.ponds_to_compare);
  const auto window = static_cast<std::uint64_t>(
      std::floor((1.0 - config.extract.safety_fraction) * static_cast<double>(config.steps)));
  SamplerOptions opt;
  opt.asymptotic_delta = 0.0;
  opt.volume_cap = window;
  for (std::uint64_t r = 0; r < replicates; ++r) {
    const PondChainSample c = sample_pond_chain(params, set.ponds, rng, opt);
    ++set.replicates;
    for (std::size_t i = 0; i < set.ponds; ++i) {
      const PondSample& p = c.ponds[i];
      if (c.Vhat[i].greater_than(static_cast<double>(window)) || p.censored || p.truncated) {
        for (std::size_t j = i; j < set.ponds; ++j) ++set.missing[j];
        break;
      }
      set.q[i].push_back(p.q);
      set.L[i].push_back(p.L.to_double());
      set.R[i].push_back(p.R.to_double());
      set.V[i].push_back(p.V.to_double());
    }
  }
  return set;
}

bool CrossValidationReport::pass() const {
  return std::all_of(metrics.begin(), metrics.end(),
                     [](const MetricRow& m) { return !m.gated || m.pass; });
}

CrossValidationReport compare_first_ponds(const FirstPondSet& invasion,
                                          const FirstPondSet& structural,
                                          const CrossValidationConfig& config) {
  CrossValidationReport report;
  report.ties = invasion.ties;
  for (std::size_t i = 0; i < invasion.ponds; ++i) {
    const double frac =
        1.0 - static_cast<double>(invasion.missing[i]) / static_cast<double>(invasion.replicates);
    report.certified_fraction.push_back(frac);
    if (1.0 - frac >= config.abort_fraction) {
      throw ConfigurationError("pond " + std::to_string(i + 1) + " uncertified in " +
                               std::to_string(invasion.missing[i]) + " of " +
                               std::to_string(invasion.replicates) +
                               " replicates; increase steps");
    }
    if (invasion.q[i].empty() || structural.q[i].empty()) {
      throw ConfigurationError("no certified ponds to compare");
    }
    const std::string tag = std::to_string(i + 1);
    auto ks_row = [&](const std::string& name, const std::vector<double>& a,
                      const std::vector<double>& b) {
      MetricRow m;
      m.name = "ks_" + name + "_" + tag;
      m.value = ks_two_sample(a, b);
      m.threshold = config.ks_threshold;
      m.pass = m.value < m.threshold;
      report.metrics.push_back(m);
    };
    ks_row("Q", invasion.q[i], structural.q[i]);
    ks_row("L", invasion.L[i], structural.L[i]);
    ks_row("R", invasion.R[i], structural.R[i]);
    ks_row("V", invasion.V[i], structural.V[i]);

    double se_a = 0.0;
    double se_b = 0.0;
    const double ma = truncated_mean(invasion.V[i], config.volume_mean_cap, &se_a);
    const double mb = truncated_mean(structural.V[i], config.volume_mean_cap, &se_b);
    MetricRow gap;
    gap.name = "rel_gap_truncated_mean_V_" + tag;
    gap.value = std::abs(ma - mb) / mb;
    gap.stderr_ = std::hypot(se_a, se_b) / mb;
    gap.threshold = config.mean_gap_threshold;
    gap.pass = gap.value < gap.threshold;
    report.metrics.push_back(gap);

    auto mean_row = [&](const std::string& name, const std::vector<double>& v) {
      Moments m;
      for (double x : v) m.add(x);
      MetricRow row;
      row.name = name + "_" + tag;
      row.value = m.mean();
      row.stderr_ = m.std_error();
      row.gated = false;
      report.metrics.push_back(row);
    };
    mean_row("mean_Q_invasion", invasion.q[i]);
    mean_row("mean_Q_structural", structural.q[i]);
    mean_row("mean_L_invasion", invasion.L[i]);
    mean_row("mean_L_structural", structural.L[i]);
    mean_row("mean_R_invasion", invasion.R[i]);
    mean_row("mean_R_structural", structural.R[i]);
    mean_row("mean_V_invasion", invasion.V[i]);
    mean_row("mean_V_structural", structural.V[i]);
  }
  return report;
}

CrossValidationReport cross_validate_first_ponds(const TreeParams& params,
                                                 const CrossValidationConfig& config,
                                                 RngStream& rng) {
  const FirstPondSet inv = collect_invasion_ponds(params, config, config.replicates, rng);
  const FirstPondSet ref =
      collect_structural_ponds(params, config, config.replicates * config.reference_factor, rng);
  return compare_first_ponds(inv, ref, config);
}

}  // namespace pondsim
