// Independent reference implementations shared by the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <tuple>
#include <vector>

#include "nmer/envs.hpp"
#include "nmer/moments.hpp"
#include "nmer/replay.hpp"
#include "nmer/ring_buffer.hpp"

namespace nmer::testing {

// All-pairs k-NN: Z-scores every stored point, sorts every candidate by
// (distance, insert order) and keeps the first k.
inline std::vector<std::size_t> brute_force_knn(const RingBuffer& buf, const RunningMoments& m,
                                                std::size_t query, std::size_t k,
                                                bool exclude_self = true) {
  const std::size_t d = buf.spec().feature_dim();
  std::vector<double> qz(d);
  for (std::size_t j = 0; j < d; ++j) qz[j] = (buf.features(query)[j] - m.mean()[j]) / m.stddev(j);
  std::vector<std::tuple<double, std::uint64_t, std::size_t>> all;
  for (std::size_t s = 0; s < buf.size(); ++s) {
    if (exclude_self && s == query) continue;
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double z = (buf.features(s)[j] - m.mean()[j]) / m.stddev(j);
      acc += (z - qz[j]) * (z - qz[j]);
    }
    all.emplace_back(acc, buf.insert_counter(s), s);
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(std::get<2>(all[i]));
  return out;
}

// Buffer of n random transitions whose coordinates sit on a coarse grid when
// `coarse` is set, which produces many exactly tied distances.
inline Transition random_grid_transition(const SpaceSpec& spec, Rng& rng, bool coarse,
                                         std::uint64_t i) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<int> g(-2, 2);
  auto draw = [&]() { return coarse ? static_cast<double>(g(rng)) : n(rng); };
  Transition t;
  for (std::size_t j = 0; j < spec.state_dim; ++j) t.s.push_back(draw() * (1.0 + j));
  for (std::size_t j = 0; j < spec.action_dim; ++j) t.a.push_back(draw());
  t.r = n(rng);
  for (std::size_t j = 0; j < spec.state_dim; ++j) t.s2.push_back(n(rng));
  t.episode_id = i / 100;
  t.step_idx = i % 100;
  return t;
}

inline std::vector<double> uniform_action(const SpaceSpec& spec, Rng& rng) {
  std::vector<double> a(spec.action_dim);
  for (std::size_t j = 0; j < spec.action_dim; ++j) {
    std::uniform_real_distribution<double> u(spec.action_low[j], spec.action_high[j]);
    a[j] = u(rng);
  }
  return a;
}

// Rolls out uniform random actions and stores n transitions. Episodes end at
// the horizon, where the terminal flag is not stored.
inline void fill_with_rollouts(ReplayMemory& mem, const Env& env, std::size_t n, Rng& rng) {
  std::uint64_t episode = 0, step = 0;
  auto s = env.reset(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = uniform_action(env.spec(), rng);
    auto res = env.step(s, a, rng);
    mem.insert(Transition{s, a, res.r, res.s2, false, episode, step});
    s = res.s2;
    if (++step >= env.horizon()) {
      step = 0;
      ++episode;
      s = env.reset(rng);
    }
  }
}

// Kolmogorov-Smirnov statistic of a sample against Uniform(0, 1).
inline double ks_uniform(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - x[i]);
    d = std::max(d, x[i] - static_cast<double>(i) / n);
  }
  return d;
}

// Asymptotic KS critical value at significance alpha: sqrt(-ln(alpha/2)/2)/sqrt(n).
inline double ks_critical(double alpha, std::size_t n) {
  return std::sqrt(-std::log(alpha / 2.0) / 2.0) / std::sqrt(static_cast<double>(n));
}

}  // namespace nmer::testing
