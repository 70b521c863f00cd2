#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nmer/config.hpp"
#include "nmer/envs.hpp"

namespace nmer {

/// Centered moving average. Near the ends the window shrinks symmetrically
/// to the points available on both sides. window must be odd.
std::vector<double> smooth(std::span<const double> values, std::size_t window);

struct LearningCurve {
  std::vector<std::uint64_t> env_steps;
  std::vector<double> raw;
  std::vector<double> smoothed;

  std::size_t size() const { return env_steps.size(); }
  void resmooth(std::size_t window) { smoothed = smooth(raw, window); }
};

/// Header env_step,eval_return_raw,eval_return_smoothed; 17 significant digits.
void write_curve_csv(std::ostream& out, const LearningCurve& curve);
LearningCurve read_curve_csv(std::istream& in);

/// Mean of the last min(window, n) smoothed points.
double final_score(const LearningCurve& curve, std::size_t window);

using Policy = std::function<std::vector<double>(std::span<const double>)>;

/// Mean undiscounted return of `episodes` horizon-length rollouts.
double evaluate_policy(const Env& env, const Policy& policy, std::uint64_t episodes, Rng& rng);

/// Generator used for evaluation rollouts: the same initial states at
/// every evaluation point and for every strategy with this seed.
Rng eval_rng(std::uint64_t seed);

struct RunResult {
  LearningCurve curve;
  double final_score = 0.0;
  std::uint64_t env_steps = 0;
  std::uint64_t gradient_steps = 0;
  std::uint64_t episodes = 0;
  /// First state of every training episode, concatenated.
  std::vector<double> episode_starts;
  std::string curve_path;
};

struct RunHooks {
  /// Called after every evaluation with (env_step, mean return).
  std::function<void(std::uint64_t, double)> on_eval;
};

/// Train-and-evaluate loop: act, step, store (a termination flag at the
/// horizon is dropped), then replay_ratio gradient updates per environment
/// step once random_steps have elapsed.
RunResult run_experiment(const RunConfig& cfg, const RunHooks& hooks = {});

struct GridCell {
  StrategyKind strategy = StrategyKind::kUniform;
  std::size_t replay_ratio = 1;
  std::size_t k = 10;
  std::vector<std::uint64_t> seeds;
  std::vector<double> finals;  // per successful seed
  std::vector<std::string> errors;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  bool best_of_grid = false;
};

struct GridSpec {
  std::vector<StrategyKind> strategies;
  std::vector<std::size_t> replay_ratios;
  std::vector<std::size_t> ks;
  std::vector<std::uint64_t> seeds;
  std::size_t jobs = 1;
};

/// Runs the Cartesian product of the grid. Failed runs are recorded in the
/// cell rather than aborting the grid.
std::vector<GridCell> run_grid(const RunConfig& base, const GridSpec& grid,
                               std::vector<RunResult>* runs = nullptr);

/// Columns: strategy,replay_ratio,k,n_seeds,mean_final,sd_final,best_of_grid,errors
void write_grid_csv(std::ostream& out, const std::vector<GridCell>& cells);

}  // namespace nmer
