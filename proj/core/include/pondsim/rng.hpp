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

#ifndef PONDSIM_RNG_HPP_
#define PONDSIM_RNG_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace pondsim {

// xoshiro256** keyed by (seed, stream_id). Each key expands through
// splitmix64 into an independent state, so shards of a batch job can derive
// their streams from the shard index alone.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id) {
    std::uint64_t x = seed ^ mix(stream_id + 0x632be59bd9b4e019ULL);
    for (auto& word : state_) word = splitmix(x);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform_open() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double exponential() { return -std::log(uniform_open()); }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t binomial(std::uint64_t trials, double p) {
    if (trials == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return trials;
    if (trials <= 16) {
      std::uint64_t hits = 0;
      for (std::uint64_t i = 0; i < trials; ++i) hits += uniform() < p;
      return hits;
    }
    std::binomial_distribution<std::uint64_t> dist(trials, p);
    return dist(*this);
  }

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(*this); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t splitmix(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    return mix(x);
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> state_{};
};

}  // namespace pondsim

#endif  // PONDSIM_RNG_HPP_
