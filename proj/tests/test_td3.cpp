#include <cmath>
#include <functional>
#include <random>

#include <doctest.h>

#include "nmer/error.hpp"
#include "nmer/td3.hpp"

using namespace nmer;

namespace {

TrainingBatch random_batch(const SpaceSpec& spec, std::size_t n, Rng& rng, double done_rate) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution d(done_rate);
  TrainingBatch b;
  b.flat_dim = spec.flat_dim();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < spec.flat_dim(); ++j) b.flats.push_back(g(rng));
    b.dones.push_back(d(rng) ? 1 : 0);
    b.importance_weights.push_back(1.0);
    b.source_slots.push_back(i);
    b.partner_slots.push_back(i);
    b.interpolated.push_back(0);
    b.lambdas.push_back(1.0);
  }
  return b;
}

std::size_t hash_params(const DenseNet& net) {
  std::size_t h = 0;
  for (double v : net.parameters()) h = h * 1000003u ^ std::hash<double>{}(v);
  return h;
}

TD3Config small_config() {
  TD3Config c;
  c.actor_hidden = {8};
  c.critic_hidden = {8};
  c.random_steps = 10;
  return c;
}

}  // namespace

TEST_CASE("targets match an independent computation with zero noise") {
  const auto spec = make_space(3, 2, 2.0);
  auto cfg = small_config();
  cfg.target_noise = 0.0;
  TD3Agent agent(spec, cfg, 1);
  Rng rng(50);
  const auto b = random_batch(spec, 32, rng, 0.3);
  const auto y = agent.compute_targets(b, rng);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto row = b.flat(i);
    Matrix s2(3, 1);
    for (int j = 0; j < 3; ++j) s2(j, 0) = row[6 + j];
    const Matrix a2 = agent.target_actor().forward(s2);
    Matrix sa2(5, 1);
    sa2 << s2, a2;
    const double q = std::min(agent.target_critic1().forward(sa2)(0, 0),
                              agent.target_critic2().forward(sa2)(0, 0));
    const double r = row[5];
    if (b.dones[i]) {
      CHECK(y[i] == r);
    } else {
      CHECK(y[i] == doctest::Approx(r + 0.99 * q).epsilon(1e-12));
    }
  }
}

TEST_CASE("terminal targets equal the reward exactly, noise or not") {
  const auto spec = make_space(2, 1);
  TD3Agent agent(spec, small_config(), 2);
  Rng rng(51);
  const auto b = random_batch(spec, 200, rng, 1.0);
  const auto y = agent.compute_targets(b, rng);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(y[i] == b.flat(i)[3]);
}

TEST_CASE("actor and targets change only on policy delay multiples") {
  const auto spec = make_space(2, 1);
  auto cfg = small_config();
  cfg.policy_delay = 3;
  TD3Agent agent(spec, cfg, 3);
  Rng rng(52);
  auto actor_hash = hash_params(agent.actor());
  auto target_hash = hash_params(agent.target_critic1());
  auto critic_hash = hash_params(agent.critic1());
  for (int step = 1; step <= 30; ++step) {
    const auto diag = agent.update(random_batch(spec, 16, rng, 0.1), rng);
    const bool due = step % 3 == 0;
    CHECK(diag.actor_updated == due);
    CHECK((hash_params(agent.actor()) != actor_hash) == due);
    CHECK((hash_params(agent.target_critic1()) != target_hash) == due);
    CHECK(hash_params(agent.critic1()) != critic_hash);
    actor_hash = hash_params(agent.actor());
    target_hash = hash_params(agent.target_critic1());
    critic_hash = hash_params(agent.critic1());
  }
  CHECK(agent.gradient_steps() == 30);
}

TEST_CASE("TD errors and critic loss follow their definitions") {
  const auto spec = make_space(2, 1);
  auto cfg = small_config();
  cfg.target_noise = 0.0;
  TD3Agent agent(spec, cfg, 4);
  Rng rng(53);
  auto b = random_batch(spec, 10, rng, 0.2);
  for (std::size_t i = 0; i < b.size(); ++i) b.importance_weights[i] = 0.1 * (i + 1);
  const auto y = agent.compute_targets(b, rng);
  const auto [q1, q2] = agent.q_values(b);
  double loss = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    loss += b.importance_weights[i] * ((q1[i] - y[i]) * (q1[i] - y[i]) + (q2[i] - y[i]) * (q2[i] - y[i]));
  }
  loss /= b.size();
  const auto diag = agent.update(b, rng);
  CHECK(diag.critic_loss == doctest::Approx(loss).epsilon(1e-12));
  for (std::size_t i = 0; i < b.size(); ++i) {
    CHECK(diag.td_errors[i] == doctest::Approx(std::abs(q1[i] - y[i])).epsilon(1e-12));
  }
}

TEST_CASE("actions stay in bounds and warmup is uniform") {
  SpaceSpec spec = make_space(2, 2);
  spec.action_low = {-1.0, 0.0};
  spec.action_high = {3.0, 0.5};
  auto cfg = small_config();
  cfg.random_steps = 1000;
  cfg.exploration_noise_sd = 5.0;
  TD3Agent agent(spec, cfg, 5);
  Rng rng(54);
  std::normal_distribution<double> g(0.0, 10.0);
  double sum0 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const std::vector<double> s{g(rng), g(rng)};
    const auto a = agent.act(s, true, 0, rng);
    sum0 += a[0];
    for (int j = 0; j < 2; ++j) {
      CHECK(a[j] >= spec.action_low[j]);
      CHECK(a[j] <= spec.action_high[j]);
    }
    const auto b = agent.act(s, true, 5000, rng);
    const auto c = agent.act(s, false, 0, rng);
    for (int j = 0; j < 2; ++j) {
      CHECK(b[j] >= spec.action_low[j]);
      CHECK(b[j] <= spec.action_high[j]);
      CHECK(c[j] >= spec.action_low[j]);
      CHECK(c[j] <= spec.action_high[j]);
    }
  }
  // Uniform on [-1, 3]: mean 1, sd 4/sqrt(12).
  CHECK(std::abs(sum0 / n - 1.0) < 4.0 * (4.0 / std::sqrt(12.0)) / std::sqrt(n));
}

TEST_CASE("greedy actions are deterministic") {
  const auto spec = make_space(3, 1);
  TD3Agent a(spec, small_config(), 6), b(spec, small_config(), 6);
  Rng r1(1), r2(2);
  const std::vector<double> s{0.1, -0.2, 0.3};
  CHECK(a.act(s, false, 100, r1) == b.act(s, false, 100, r2));
  CHECK(a.actor().parameters() == b.actor().parameters());
}

TEST_CASE("agent rejects malformed input") {
  const auto spec = make_space(2, 1);
  TD3Agent agent(spec, small_config(), 7);
  Rng rng(55);
  CHECK_THROWS_AS(agent.act(std::vector<double>{1.0}, false, 0, rng), InvalidInput);
  TrainingBatch empty;
  empty.flat_dim = spec.flat_dim();
  CHECK_THROWS_AS(agent.update(empty, rng), InvalidInput);
  auto cfg = small_config();
  cfg.tau = 0.0;
  CHECK_THROWS_AS(TD3Agent(spec, cfg, 0), InvalidConfig);
}

TEST_CASE("critic regression converges on a fixed batch") {
  const auto spec = make_space(2, 1);
  auto cfg = small_config();
  cfg.gamma = 0.0;
  cfg.critic_lr = 1e-2;
  cfg.optimizer = OptimizerKind::kAdam;
  TD3Agent agent(spec, cfg, 8);
  Rng rng(56);
  auto b = random_batch(spec, 64, rng, 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) {
    auto row = b.flat(i);
    row[3] = row[0] - 2.0 * row[2];
  }
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const auto d = agent.update(b, rng);
    if (i == 0) first = d.critic_loss;
    last = d.critic_loss;
  }
  CHECK(last < 0.1 * first);
}
