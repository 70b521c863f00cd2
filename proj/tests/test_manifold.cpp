#include <cmath>
#include <sstream>

#include <doctest.h>

#include "nmer/error.hpp"
#include "nmer/manifold.hpp"
#include "support.hpp"

using namespace nmer;

TEST_CASE("true transitions have zero residual") {
  PendulumEnv env;
  Rng rng(70);
  for (int i = 0; i < 100; ++i) {
    const auto s = env.reset(rng);
    const auto a = nmer::testing::uniform_action(env.spec(), rng);
    const auto res = env.step(s, a, rng);
    const auto flat = encode({s, a, res.r, res.s2, false, 0, 0}, env.spec());
    const auto ir = item_residual(flat.view(), env);
    CHECK(ir.total == 0.0);
  }
}

TEST_CASE("residual components") {
  LinearEnv env(make_linear_params(2, 1, 3));
  const std::vector<double> s{0.1, 0.2}, a{0.3};
  const auto m = env.model(s, a);
  auto flat = encode({s, a, m.r + 3.0, {m.s2[0] + 4.0, m.s2[1]}, false, 0, 0}, env.spec());
  const auto ir = item_residual(flat.view(), env);
  CHECK(ir.reward == doctest::Approx(3.0));
  CHECK(ir.state == doctest::Approx(4.0));
  CHECK(ir.total == doctest::Approx(5.0));
}

TEST_CASE("reports skip passthrough items and summarize") {
  LinearEnv env(make_linear_params(2, 1, 4));
  StrategyConfig cfg;
  cfg.kind = StrategyKind::kNmer;
  cfg.k = 5;
  ReplayMemory mem(env.spec(), 2000, cfg);
  Rng rng(71);
  nmer::testing::fill_with_rollouts(mem, env, 2000, rng);
  auto batch = mem.sample(300, 0, rng);
  batch.interpolated[0] = 0;
  const auto rep = residual(batch, env, "nmer", 9, 1000);
  CHECK(rep.count() == 299);
  CHECK(rep.sample_ids.front() == 1001);
  CHECK(rep.max < 1e-9);
  CHECK(rep.median <= rep.p95);
  CHECK(rep.p95 <= rep.max);
  std::ostringstream out;
  write_residual_csv(out, rep);
  CHECK(out.str().rfind("strategy,seed,sample_id,residual,reward_residual,state_residual\nnmer,9,1001,", 0) == 0);

  ResidualReport merged;
  merged.merge(rep);
  merged.merge(rep);
  CHECK(merged.count() == 598);
  CHECK(merged.mean == doctest::Approx(rep.mean));
}

TEST_CASE("summary statistics of a known sample") {
  ResidualReport r;
  for (int i = 1; i <= 100; ++i) {
    r.sample_ids.push_back(i);
    r.residuals.push_back(i);
    r.reward_residuals.push_back(0);
    r.state_residuals.push_back(i);
  }
  r.summarize();
  CHECK(r.mean == doctest::Approx(50.5));
  CHECK(r.median == doctest::Approx(50.5));
  CHECK(r.max == 100.0);
  CHECK(r.p95 >= 95.0);
  CHECK(r.p95 <= 96.0);
}

TEST_CASE("stochastic environments are rejected") {
  auto p = make_linear_params(2, 1, 5);
  p.noise_sd = 0.1;
  LinearEnv env(p);
  TrainingBatch b;
  b.flat_dim = env.spec().flat_dim();
  CHECK_THROWS_AS(residual(b, env), InvalidConfig);
}
