#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "nmer/error.hpp"
#include "nmer/harness.hpp"

using namespace nmer;

namespace {

RunConfig tiny_run() {
  RunConfig c;
  c.env.name = "linear";
  c.env.linear_state_dim = 2;
  c.env.linear_action_dim = 1;
  c.env.horizon = 50;
  c.total_env_steps = 300;
  c.eval_interval = 50;
  c.eval_episodes = 2;
  c.smoothing_window = 3;
  c.td3.random_steps = 100;
  c.td3.batch_size = 16;
  c.td3.actor_hidden = {8};
  c.td3.critic_hidden = {8};
  c.buffer_capacity = 1000;
  return c;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("smoothing matches a shrinking centered window") {
  const std::vector<double> v{1, 2, 4, 8, 16, 32, 64};
  const auto s = smooth(v, 5);
  CHECK(s[0] == 1.0);
  CHECK(s[1] == doctest::Approx((1 + 2 + 4) / 3.0));
  CHECK(s[2] == doctest::Approx((1 + 2 + 4 + 8 + 16) / 5.0));
  CHECK(s[3] == doctest::Approx((2 + 4 + 8 + 16 + 32) / 5.0));
  CHECK(s[5] == doctest::Approx((16 + 32 + 64) / 3.0));
  CHECK(s[6] == 64.0);
  CHECK(smooth(v, 1) == v);
  CHECK_THROWS_AS(smooth(v, 4), InvalidParameter);
  CHECK(smooth(std::vector<double>{}, 3).empty());
}

TEST_CASE("final score averages the last smoothed points") {
  LearningCurve c;
  c.env_steps = {1, 2, 3, 4};
  c.raw = {0, 0, 0, 0};
  c.smoothed = {1, 2, 3, 5};
  CHECK(final_score(c, 3) == doctest::Approx((2 + 3 + 5) / 3.0));
  CHECK(final_score(c, 11) == doctest::Approx(11 / 4.0));
}

TEST_CASE("curve CSV round trip") {
  LearningCurve c;
  c.env_steps = {100, 200};
  c.raw = {-1.0 / 3.0, 2.5e-17};
  c.resmooth(3);
  std::stringstream ss;
  write_curve_csv(ss, c);
  CHECK(ss.str().rfind("env_step,eval_return_raw,eval_return_smoothed\n", 0) == 0);
  const auto back = read_curve_csv(ss);
  CHECK(back.env_steps == c.env_steps);
  CHECK(back.raw == c.raw);
  CHECK(back.smoothed == c.smoothed);
}

TEST_CASE("replay ratio sets the number of gradient steps") {
  for (std::size_t rr : {1, 3}) {
    auto c = tiny_run();
    c.td3.replay_ratio = rr;
    const auto r = run_experiment(c);
    CHECK(r.gradient_steps == (300 - 100) * rr);
    CHECK(r.curve.size() == 6);
    CHECK(r.episodes == 6);
  }
}

TEST_CASE("runs are deterministic and seeds pair across strategies") {
  auto c = tiny_run();
  c.seed = 3;
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  CHECK(a.curve.raw == b.curve.raw);
  c.strategy.kind = StrategyKind::kNmer;
  c.strategy.k = 5;
  const auto n = run_experiment(c);
  CHECK(n.episode_starts == a.episode_starts);
  c.seed = 4;
  const auto other = run_experiment(c);
  CHECK(other.episode_starts != a.episode_starts);
}

TEST_CASE("evaluation uses the same initial states every time") {
  PendulumEnv env;
  const Policy zero = [](std::span<const double>) { return std::vector<double>{0.0}; };
  Rng a = eval_rng(5), b = eval_rng(5);
  CHECK(evaluate_policy(env, zero, 3, a) == evaluate_policy(env, zero, 3, b));
}

TEST_CASE("warmup must cover the strategy's population") {
  auto c = tiny_run();
  c.strategy.kind = StrategyKind::kNmer;
  c.strategy.k = 10;
  c.td3.random_steps = 5;
  CHECK_THROWS_AS(run_experiment(c), InvalidConfig);
}

TEST_CASE("output files are written under the label") {
  const auto dir = std::filesystem::temp_directory_path() / "nmer_harness_test";
  std::filesystem::remove_all(dir);
  auto c = tiny_run();
  c.out_dir = dir.string();
  c.dump_buffer = true;
  const auto r = run_experiment(c);
  CHECK(r.curve_path == (dir / "curve_uniform_rr1_seed0.csv").string());
  CHECK(std::filesystem::exists(dir / "buffer_uniform_rr1_seed0.txt"));
  const auto first = slurp(r.curve_path);
  run_experiment(c);
  CHECK(slurp(r.curve_path) == first);
  std::filesystem::remove_all(dir);
}

TEST_CASE("grid counts cells and averages seeds") {
  auto c = tiny_run();
  c.total_env_steps = 150;
  GridSpec g;
  g.strategies = {StrategyKind::kUniform, StrategyKind::kNmer};
  g.replay_ratios = {1, 2};
  g.ks = {3};
  g.seeds = {0, 1, 2};
  g.jobs = 2;
  std::vector<RunResult> runs;
  const auto cells = run_grid(c, g, &runs);
  REQUIRE(cells.size() == 4);
  CHECK(runs.size() == 12);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& cell = cells[i];
    REQUIRE(cell.finals.size() == 3);
    CHECK(cell.errors.empty());
    double mean = 0.0;
    for (std::size_t s = 0; s < 3; ++s) {
      CHECK(cell.finals[s] == runs[i * 3 + s].final_score);
      mean += cell.finals[s];
    }
    mean /= 3.0;
    CHECK(cell.mean == doctest::Approx(mean));
    double ss = 0.0;
    for (double f : cell.finals) ss += (f - mean) * (f - mean);
    CHECK(cell.sd == doctest::Approx(std::sqrt(ss / 2.0)));
  }
  int best = 0;
  for (const auto& cell : cells) best += cell.best_of_grid;
  CHECK(best == 2);
  std::ostringstream out;
  write_grid_csv(out, cells);
  CHECK(out.str().rfind("strategy,replay_ratio,k,n_seeds,mean_final,sd_final,best_of_grid,errors\n", 0) == 0);
}

TEST_CASE("grid records failing runs without aborting") {
  auto c = tiny_run();
  c.total_env_steps = 150;
  c.td3.random_steps = 2;
  GridSpec g;
  g.strategies = {StrategyKind::kUniform, StrategyKind::kNmer};
  g.replay_ratios = {1};
  g.ks = {10};
  g.seeds = {0};
  const auto cells = run_grid(c, g);
  CHECK(cells[0].errors.empty());
  CHECK(cells[1].errors.size() == 1);
  CHECK(cells[1].finals.empty());
}
