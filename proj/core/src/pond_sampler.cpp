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

#include "pondsim/pond_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pondsim {
namespace {

constexpr double kMaxBackbone = 0x1.0p62;
constexpr std::uint64_t kWalkStepCap = 10'000'000'000ULL;
// Below this delta the backbone length is drawn in log form.
constexpr double kLogBackboneDelta = 1e-12;

std::uint64_t saturating_sub(std::uint64_t a, std::uint64_t b) { return a > b ? a - b : 0; }

struct Growth {
  std::uint64_t size = 0;
  std::uint64_t depth = 0;
  bool size_capped = false;
  bool depth_capped = false;
  bool out_of_budget = false;
};

// Generation-by-generation growth: Z_{g+1} ~ Binomial(sigma Z_g, p). Stops
// early once size > size_cap or depth > depth_cap.
Growth grow(int sigma, double p, RngStream& rng, std::uint64_t size_cap, std::uint64_t depth_cap,
            std::uint64_t& work, std::uint64_t budget) {
  Growth g;
  std::uint64_t z = 1;
  while (true) {
    if (++work > budget) {
      g.out_of_budget = true;
      break;
    }
    const std::uint64_t c = rng.binomial(static_cast<std::uint64_t>(sigma) * z, p);
    if (c == 0) break;
    g.size += c;
    ++g.depth;
    z = c;
    if (g.size > size_cap) {
      g.size_capped = true;
      break;
    }
    if (g.depth > depth_cap) {
      g.depth_capped = true;
      break;
    }
    if (g.size > (std::uint64_t{1} << 62)) throw NumericsError("Galton-Watson cluster overflow");
  }
  return g;
}

double side_param(const TreeParams& params, double delta) { return params.p_c() * (1.0 - delta); }

PondSample exact_pond(const TreeParams& params, PondSample s, RngStream& rng,
                      const SamplerOptions& opt) {
  if (s.delta < kLogBackboneDelta) {
    s.L = Count::from_log(std::max(std::log(rng.exponential()) - s.log_delta, 0.0));
    const bool over_cap = s.L.greater_than(static_cast<double>(opt.volume_cap)) ||
                          s.L.greater_than(static_cast<double>(opt.radius_cap));
    if (opt.lengths_only || over_cap || !s.L.is_exact() ||
        s.L.greater_than(static_cast<double>(opt.work_budget))) {
      s.R = s.L;
      s.V = s.L;
      if (!opt.lengths_only) (over_cap ? s.censored : s.truncated) = true;
      return s;
    }
  } else {
    s.L = Count::exact(sample_backbone_length(s.delta, rng));
  }
  const std::uint64_t L = s.L.value();
  std::uint64_t V = L;
  std::uint64_t R = L;
  auto finish = [&]() {
    s.V = Count::exact(V);
    s.R = Count::exact(R);
    return s;
  };
  if (opt.lengths_only) return finish();
  if (L > opt.volume_cap || L > opt.radius_cap) {
    s.censored = true;
    return finish();
  }
  const int sigma = params.sigma();
  const double p = side_param(params, s.delta);
  std::uint64_t work = 0;
  for (std::uint64_t h = 1; h <= L; ++h) {
    for (int sib = 1; sib < sigma; ++sib) {
      if (++work > opt.work_budget) {
        s.truncated = true;
        return finish();
      }
      if (!rng.bernoulli(p)) {
        if (opt.keep_cluster_sizes) s.side_cluster_sizes.push_back(0);
        continue;
      }
      // Sibling edge at height h opens onto a tree rooted at height h.
      const Growth g = grow(sigma, p, rng, saturating_sub(opt.volume_cap, V + 1),
                            saturating_sub(opt.radius_cap, h), work, opt.work_budget);
      V += 1 + g.size;
      R = std::max(R, h + g.depth);
      if (opt.keep_cluster_sizes) s.side_cluster_sizes.push_back(1 + g.size);
      if (g.out_of_budget) {
        s.truncated = true;
        return finish();
      }
      if (g.size_capped || g.depth_capped || V > opt.volume_cap || R > opt.radius_cap) {
        s.censored = true;
        return finish();
      }
    }
  }
  return finish();
}

// Scaling-limit sampler for delta -> 0. Given L, the exploration walk has
// drift -delta and step variance s^2 = sigma^2 p (1-p), so its hitting time
// T is (sigma-1) L / delta times an IG(1, (sigma-1) delta L / s^2) variable.
// The radius follows
//   P(R <= r | L) = ((1 - e^{-delta (r - L)}) / (1 - e^{-delta r}))^kappa,
// kappa = 2 (sigma-1) / (sigma (1-p)), from the near-critical survival
// probabilities of the sibling clusters. R and V are drawn independently
// given L.
PondSample asymptotic_pond(const TreeParams& params, PondSample s, RngStream& rng,
                           const SamplerOptions& opt) {
  s.asymptotic = true;
  const int sigma = params.sigma();
  double log_l;  // log L
  double l;      // delta L
  if (s.delta >= kLogBackboneDelta) {
    const std::uint64_t L = sample_backbone_length(s.delta, rng);
    s.L = Count::exact(L);
    log_l = std::log(static_cast<double>(L));
    l = static_cast<double>(L) * s.delta;
  } else {
    l = rng.exponential();
    log_l = std::log(l) - s.log_delta;
    s.L = Count::from_log(std::max(log_l, 0.0));
    log_l = s.L.log();
    l = std::exp(log_l + s.log_delta);
  }
  if (opt.lengths_only) {
    s.R = s.L;
    s.V = s.L;
    return s;
  }
  const double p = side_param(params, s.delta);
  const double s2 = static_cast<double>(sigma) * sigma * p * (1.0 - p);

  const double shape = (sigma - 1.0) * l / s2;
  const double x_ig = sample_inverse_gaussian(1.0, shape, rng);
  const double log_n0 = std::log(sigma - 1.0) + log_l;
  const double log_t = std::max(log_n0 - s.log_delta + std::log(x_ig), log_n0);
  const double hi = std::max(log_t, log_l);
  const double lo = std::min(log_t, log_l);
  s.V = Count::from_log(hi + std::log1p(std::exp(lo - hi)) - std::log(sigma));

  const double kappa = 2.0 * (sigma - 1.0) / (sigma * (1.0 - p));
  const double log_w = std::log(rng.uniform_open()) / kappa;
  const double one_minus_w = -std::expm1(log_w);
  const double w = std::exp(log_w);
  const double log_num = l < 1.0 ? std::log(std::expm1(l) + one_minus_w)
                                 : l + std::log1p(-w * std::exp(-l));
  const double x = std::max(log_num - std::log(one_minus_w), l);
  s.R = Count::from_log(std::max(std::log(x) - s.log_delta, log_l));
  if (s.R < s.L) s.R = s.L;
  if (s.V < s.L) s.V = s.L;

  if (s.V.greater_than(static_cast<double>(opt.volume_cap)) ||
      s.R.greater_than(static_cast<double>(opt.radius_cap))) {
    s.censored = true;
  }
  return s;
}

}  // namespace

std::uint64_t sample_backbone_length(double delta, RngStream& rng) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in (0, 1]");
  if (delta == 1.0) return 1;
  const double m = std::floor(std::log(rng.uniform_open()) / std::log1p(-delta));
  if (m >= kMaxBackbone) throw NumericsError("backbone length overflows 64 bits");
  return 1 + static_cast<std::uint64_t>(m);
}

GwCluster sample_gw_cluster(const TreeParams& params, double p, RngStream& rng) {
  if (!(p >= 0.0 && p < params.p_c())) {
    throw std::invalid_argument("Galton-Watson sampler needs 0 <= p < p_c");
  }
  std::uint64_t work = 0;
  const auto none = std::numeric_limits<std::uint64_t>::max();
  const Growth g = grow(params.sigma(), p, rng, none, none, work, none);
  return {g.size, g.depth};
}

PondSample sample_pond(const TreeParams& params, const OutletState& outlet, RngStream& rng,
                       const SamplerOptions& options) {
  PondSample s;
  s.q = outlet.q;
  s.delta = outlet.delta;
  s.log_delta = outlet.log_delta;
  if (s.delta >= options.asymptotic_delta && s.delta > 0.0) {
    return exact_pond(params, std::move(s), rng, options);
  }
  return asymptotic_pond(params, std::move(s), rng, options);
}

PondSample sample_pond(const TreeParams& params, double q, RngStream& rng,
                       const SamplerOptions& options) {
  return sample_pond(params, outlet_state_from_q(params, q), rng, options);
}

void fill_cumulative(PondChainSample& sample) {
  const std::size_t n = sample.ponds.size();
  sample.Lhat.assign(n, Count());
  sample.Vhat.assign(n, Count());
  sample.Rprime.assign(n, Count());
  sample.Z.assign(n, ZVector{});
  Count lhat_prev = Count::exact(0);
  Count vhat_prev = Count::exact(0);
  Count rprime_prev = Count::exact(0);
  for (std::size_t i = 0; i < n; ++i) {
    const PondSample& pond = sample.ponds[i];
    const Count rprime = max(rprime_prev, lhat_prev + pond.R);
    sample.Lhat[i] = lhat_prev + pond.L;
    sample.Vhat[i] = vhat_prev + pond.V;
    sample.Rprime[i] = rprime;
    sample.Z[i] = {-sample.chain.log_excess[i], pond.L.log(),       sample.Lhat[i].log(),
                   pond.R.log(),                 rprime.log(),        0.5 * pond.V.log(),
                   0.5 * sample.Vhat[i].log()};
    lhat_prev = sample.Lhat[i];
    vhat_prev = sample.Vhat[i];
    rprime_prev = rprime;
    sample.truncated = sample.truncated || pond.truncated;
    sample.censored = sample.censored || pond.censored;
  }
}

PondChainSample sample_pond_chain(const TreeParams& params, std::size_t n, RngStream& rng,
                                  const SamplerOptions& options) {
  PondChainSample sample;
  sample.chain = sample_outlet_chain(params, n, rng);
  sample.ponds.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    OutletState outlet = sample.chain.state(i);
    sample.ponds.push_back(sample_pond(params, outlet, rng, options));
  }
  fill_cumulative(sample);
  return sample;
}

WalkResult excursion_walk_volume(const TreeParams& params, double q, std::uint64_t L,
                                 RngStream& rng, WalkMode mode) {
  if (L == 0) throw std::invalid_argument("backbone length must be >= 1");
  const double p = subcritical_param(params, q);
  const std::uint64_t sigma = static_cast<std::uint64_t>(params.sigma());
  std::uint64_t n = (sigma - 1) * L;
  std::uint64_t t = 0;
  std::uint64_t opened = 0;
  if (mode == WalkMode::kStepwise) {
    while (n > 0) {
      if (++t > kWalkStepCap) throw std::logic_error("excursion walk exceeded step cap");
      if (rng.bernoulli(p)) {
        n += sigma - 1;
        ++opened;
      } else {
        --n;
      }
    }
  } else {
    while (n > 0) {
      t += n;
      if (t > kWalkStepCap) throw std::logic_error("excursion walk exceeded step cap");
      const std::uint64_t k = rng.binomial(n, p);
      opened += k;
      n = sigma * k;
    }
  }
  return {t, L + opened};
}

double sample_inverse_gaussian(double mean, double shape, RngStream& rng) {
  if (!(mean > 0.0 && shape > 0.0)) throw std::invalid_argument("IG parameters must be positive");
  const double nu = rng.normal();
  const double a = mean * nu * nu / (2.0 * shape);
  const double x = mean / (1.0 + a + std::sqrt(a * (2.0 + a)));
  if (rng.uniform() * (mean + x) <= mean) return x;
  return mean * mean / x;
}

}  // namespace pondsim
