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

#include <benchmark/benchmark.h>

#include "pondsim/defects.hpp"
#include "pondsim/invasion.hpp"
#include "pondsim/outlet_chain.hpp"
#include "pondsim/pond_sampler.hpp"
#include "pondsim/stats.hpp"

namespace {

using namespace pondsim;

const TreeParams kTree(2);

void BM_Invasion(benchmark::State& state) {
  RngStream rng(1, 0);
  const auto steps = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    InvasionTrace t = run_invasion(kTree, steps, rng);
    benchmark::DoNotOptimize(t);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Invasion)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_ExtractPonds(benchmark::State& state) {
  RngStream rng(2, 0);
  const InvasionTrace t = run_invasion(kTree, 100000, rng);
  for (auto _ : state) benchmark::DoNotOptimize(extract_ponds(t));
}
BENCHMARK(BM_ExtractPonds)->Unit(benchmark::kMillisecond);

void BM_OutletChain(benchmark::State& state) {
  RngStream rng(3, 0);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_outlet_chain(kTree, n, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OutletChain)->Arg(10)->Arg(400);

void BM_PondSample(benchmark::State& state) {
  RngStream rng(4, 0);
  const double q = 0.5 + 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_pond(kTree, q, rng));
}
BENCHMARK(BM_PondSample)->Arg(10)->Arg(100)->Arg(1000);

void BM_PondChain(benchmark::State& state) {
  RngStream rng(5, 0);
  SamplerOptions opt;
  opt.asymptotic_delta = 1e-3;
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_pond_chain(kTree, n, rng, opt));
}
BENCHMARK(BM_PondChain)->Arg(50)->Arg(400)->Unit(benchmark::kMicrosecond);

void BM_DefectDp(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(defect_reach_dp(kTree, kTree.p_c(), k, 3));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DefectDp)->Arg(10000)->Arg(1000000)->Unit(benchmark::kMillisecond);

void BM_TailQuadrature(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ln_tail_quadrature(kTree, n, 10000));
}
BENCHMARK(BM_TailQuadrature)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
