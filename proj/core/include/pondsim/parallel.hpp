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

#ifndef PONDSIM_PARALLEL_HPP_
#define PONDSIM_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

#include "pondsim/rng.hpp"

namespace pondsim {

// Replicates are split into a fixed number of shards that does not depend on
// the thread count; shard i owns RngStream(seed, i).
struct ShardPlan {
  std::uint64_t replicates = 0;
  std::uint64_t shards = 1;

  std::uint64_t size(std::uint64_t shard) const {
    const std::uint64_t base = replicates / shards;
    return base + (shard < replicates % shards ? 1 : 0);
  }
  // Global index of the shard's first replicate.
  std::uint64_t start(std::uint64_t shard) const {
    return shard * (replicates / shards) + std::min(shard, replicates % shards);
  }
};

inline ShardPlan make_shard_plan(std::uint64_t replicates, std::uint64_t target_shard_size) {
  ShardPlan plan;
  plan.replicates = replicates;
  plan.shards = std::max<std::uint64_t>(
      1, (replicates + target_shard_size - 1) / std::max<std::uint64_t>(1, target_shard_size));
  return plan;
}

inline unsigned resolve_threads(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(shard_index, shard_size, rng) for every shard on a worker pool and
// returns the results in shard order. Shard i draws from
// RngStream(seed, stream_base + i).
template <class Fn>
auto run_shards(const ShardPlan& plan, std::uint64_t seed, unsigned threads, Fn fn,
                std::uint64_t stream_base = 0)
    -> std::vector<std::invoke_result_t<Fn, std::uint64_t, std::uint64_t, RngStream&>> {
  using Result = std::invoke_result_t<Fn, std::uint64_t, std::uint64_t, RngStream&>;
  std::vector<Result> results(plan.shards);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      const std::uint64_t i = next.fetch_add(1);
      if (i >= plan.shards) return;
      try {
        RngStream rng(seed, stream_base + i);
        results[i] = fn(i, plan.size(i), rng);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = plan.shards;
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(plan.shards)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace pondsim

#endif  // PONDSIM_PARALLEL_HPP_
