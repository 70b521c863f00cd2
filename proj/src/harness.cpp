#include "nmer/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "nmer/error.hpp"
#include "nmer/replay.hpp"
#include "nmer/td3.hpp"

namespace nmer {

namespace {

enum Stream : std::uint64_t {
  kResetStream = 1,
  kStepStream = 2,
  kActStream = 3,
  kReplayStream = 4,
  kUpdateStream = 5,
  kEvalStream = 6,
};

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<double> smooth(std::span<const double> values, std::size_t window) {
  if (window == 0 || window % 2 == 0) throw InvalidParameter("smoothing window must be odd");
  const std::size_t n = values.size();
  const std::size_t half = window / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t h = std::min({half, i, n - 1 - i});
    double sum = 0.0;
    for (std::size_t j = i - h; j <= i + h; ++j) sum += values[j];
    out[i] = sum / static_cast<double>(2 * h + 1);
  }
  return out;
}

void write_curve_csv(std::ostream& out, const LearningCurve& curve) {
  out << "env_step,eval_return_raw,eval_return_smoothed\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << curve.env_steps[i] << ',' << fmt17(curve.raw[i]) << ',' << fmt17(curve.smoothed[i])
        << '\n';
  }
}

LearningCurve read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("env_step,eval_return_raw", 0) != 0) {
    throw InvalidInput("learning curve CSV is missing its header");
  }
  LearningCurve c;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string step, raw, smoothed;
    if (!std::getline(ss, step, ',') || !std::getline(ss, raw, ',')) {
      throw InvalidInput("malformed learning curve row: " + line);
    }
    std::getline(ss, smoothed, ',');
    c.env_steps.push_back(std::stoull(step));
    c.raw.push_back(std::stod(raw));
    c.smoothed.push_back(smoothed.empty() ? c.raw.back() : std::stod(smoothed));
  }
  return c;
}

double final_score(const LearningCurve& curve, std::size_t window) {
  if (curve.size() == 0) return 0.0;
  const std::size_t m = std::min(window, curve.size());
  const double sum = std::accumulate(curve.smoothed.end() - static_cast<std::ptrdiff_t>(m),
                                     curve.smoothed.end(), 0.0);
  return sum / static_cast<double>(m);
}

double evaluate_policy(const Env& env, const Policy& policy, std::uint64_t episodes, Rng& rng) {
  if (episodes == 0) throw InvalidParameter("need at least one evaluation episode");
  double total = 0.0;
  for (std::uint64_t e = 0; e < episodes; ++e) {
    std::vector<double> s = env.reset(rng);
    for (std::uint64_t t = 0; t < env.horizon(); ++t) {
      StepResult res = env.step(s, policy(s), rng);
      total += res.r;
      if (res.done) break;
      s = std::move(res.s2);
    }
  }
  return total / static_cast<double>(episodes);
}

Rng eval_rng(std::uint64_t seed) { return make_stream(seed, kEvalStream); }

RunResult run_experiment(const RunConfig& cfg, const RunHooks& hooks) {
  cfg.validate();
  const auto env = make_env(cfg.env);
  const SpaceSpec& spec = env->spec();
  ReplayMemory memory(spec, cfg.buffer_capacity, cfg.strategy);
  TD3Agent agent(spec, cfg.td3, cfg.seed);
  if (cfg.td3.random_steps < cfg.total_env_steps &&
      (cfg.td3.random_steps + 1 < memory.min_population() ||
       cfg.buffer_capacity < memory.min_population())) {
    throw InvalidConfig("td3.random_steps must cover the strategy's minimum population of " +
                        std::to_string(memory.min_population()) + " transitions");
  }

  Rng reset_rng = make_stream(cfg.seed, kResetStream);
  Rng step_rng = make_stream(cfg.seed, kStepStream);
  Rng act_rng = make_stream(cfg.seed, kActStream);
  Rng replay_rng = make_stream(cfg.seed, kReplayStream);
  Rng update_rng = make_stream(cfg.seed, kUpdateStream);

  RunResult result;
  std::vector<double> s = env->reset(reset_rng);
  result.episode_starts.insert(result.episode_starts.end(), s.begin(), s.end());
  std::uint64_t episode = 0;
  std::uint64_t t_in_episode = 0;
  const Policy greedy = [&agent](std::span<const double> state) {
    Rng unused(0);
    return agent.act(state, false, 0, unused);
  };

  for (std::uint64_t step = 0; step < cfg.total_env_steps; ++step) {
    std::vector<double> a = agent.act(s, true, step, act_rng);
    StepResult res = env->step(s, a, step_rng);
    ++t_in_episode;
    const bool truncated = t_in_episode >= env->horizon();
    // A termination signal is kept only when it happens before the horizon.
    const bool stored_done = res.done && !truncated;
    memory.insert({s, a, res.r, res.s2, stored_done, episode, t_in_episode - 1});
    if (res.done || truncated) {
      s = env->reset(reset_rng);
      result.episode_starts.insert(result.episode_starts.end(), s.begin(), s.end());
      ++episode;
      t_in_episode = 0;
    } else {
      s = std::move(res.s2);
    }

    const std::uint64_t env_steps = step + 1;
    if (env_steps > cfg.td3.random_steps) {
      for (std::size_t u = 0; u < cfg.td3.replay_ratio; ++u) {
        const TrainingBatch batch =
            memory.sample(cfg.td3.batch_size, agent.gradient_steps(), replay_rng);
        const TD3Diagnostics diag = agent.update(batch, update_rng);
        memory.update_priorities(batch.source_slots, diag.td_errors);
      }
    }
    if (env_steps % cfg.eval_interval == 0) {
      Rng rng = eval_rng(cfg.seed);
      const double ret = evaluate_policy(*env, greedy, cfg.eval_episodes, rng);
      result.curve.env_steps.push_back(env_steps);
      result.curve.raw.push_back(ret);
      if (hooks.on_eval) hooks.on_eval(env_steps, ret);
    }
  }
  result.curve.resmooth(cfg.smoothing_window);
  result.final_score = final_score(result.curve, cfg.smoothing_window);
  result.env_steps = cfg.total_env_steps;
  result.gradient_steps = agent.gradient_steps();
  result.episodes = episode + (t_in_episode > 0 ? 1 : 0);

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path dir(cfg.out_dir);
    const std::string label = cfg.run_label();
    result.curve_path = (dir / ("curve_" + label + ".csv")).string();
    std::ofstream f(result.curve_path);
    if (!f) throw InvalidInput("cannot write " + result.curve_path);
    write_curve_csv(f, result.curve);
    if (cfg.dump_buffer) memory.buffer().dump((dir / ("buffer_" + label + ".txt")).string());
  }
  return result;
}

std::vector<GridCell> run_grid(const RunConfig& base, const GridSpec& grid,
                               std::vector<RunResult>* runs) {
  if (grid.strategies.empty() || grid.replay_ratios.empty() || grid.ks.empty() ||
      grid.seeds.empty()) {
    throw InvalidParameter("every grid axis needs at least one value");
  }
  std::vector<GridCell> cells;
  struct Job {
    std::size_t cell;
    RunConfig cfg;
  };
  std::vector<Job> jobs;
  for (StrategyKind kind : grid.strategies) {
    for (std::size_t rr : grid.replay_ratios) {
      for (std::size_t k : grid.ks) {
        GridCell cell;
        cell.strategy = kind;
        cell.replay_ratio = rr;
        cell.k = k;
        cell.seeds = grid.seeds;
        for (std::uint64_t seed : grid.seeds) {
          RunConfig cfg = base;
          cfg.strategy.kind = kind;
          cfg.strategy.k = k;
          cfg.td3.replay_ratio = rr;
          cfg.seed = seed;
          cfg.label = std::string(to_string(kind)) + "_rr" + std::to_string(rr) + "_k" +
                      std::to_string(k) + "_seed" + std::to_string(seed);
          jobs.push_back({cells.size(), std::move(cfg)});
        }
        cells.push_back(std::move(cell));
      }
    }
  }

  std::vector<RunResult> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::vector<std::uint8_t> ok(jobs.size(), 0);
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next == jobs.size()) return;
        i = next++;
      }
      try {
        results[i] = run_experiment(jobs[i].cfg);
        ok[i] = 1;
      } catch (const std::exception& e) {
        errors[i] = jobs[i].cfg.label + ": " + e.what();
      }
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(grid.jobs, 1, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    GridCell& cell = cells[jobs[i].cell];
    if (ok[i]) {
      cell.finals.push_back(results[i].final_score);
    } else {
      cell.errors.push_back(errors[i]);
    }
  }
  for (GridCell& cell : cells) {
    const auto n = static_cast<double>(cell.finals.size());
    if (cell.finals.empty()) continue;
    cell.mean = std::accumulate(cell.finals.begin(), cell.finals.end(), 0.0) / n;
    double ss = 0.0;
    for (double f : cell.finals) ss += (f - cell.mean) * (f - cell.mean);
    cell.sd = cell.finals.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  for (StrategyKind kind : grid.strategies) {
    GridCell* best = nullptr;
    for (GridCell& cell : cells) {
      if (cell.strategy != kind || cell.finals.empty()) continue;
      if (!best || cell.mean > best->mean) best = &cell;
    }
    if (best) best->best_of_grid = true;
  }
  if (runs) *runs = std::move(results);
  return cells;
}

void write_grid_csv(std::ostream& out, const std::vector<GridCell>& cells) {
  out << "strategy,replay_ratio,k,n_seeds,mean_final,sd_final,best_of_grid,errors\n";
  for (const GridCell& c : cells) {
    out << to_string(c.strategy) << ',' << c.replay_ratio << ',' << c.k << ','
        << c.finals.size() << ',' << fmt17(c.mean) << ',' << fmt17(c.sd) << ','
        << (c.best_of_grid ? 1 : 0) << ',' << c.errors.size() << '\n';
  }
}

}  // namespace nmer
