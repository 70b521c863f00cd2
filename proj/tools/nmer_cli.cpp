// Command-line front end: run, grid, residuals, smooth.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <CLI11.hpp>

#include "nmer/config.hpp"
#include "nmer/error.hpp"
#include "nmer/harness.hpp"
#include "nmer/manifold.hpp"
#include "nmer/replay.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "key = value configuration file");
  cmd->add_option("--set", f.sets, "override a config key (key=value), repeatable");
  cmd->add_option("--out", f.out, "output directory or file");
}

nmer::RunConfig build_config(const CommonFlags& f) {
  nmer::RunConfig cfg;
  if (!f.config.empty()) cfg = nmer::load_config(f.config);
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw nmer::InvalidConfig("--set expects key=value, got " + kv);
    nmer::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

template <typename T>
std::vector<T> split_list(const std::string& text, T (*parse)(const std::string&)) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse(item));
  }
  return out;
}

std::size_t parse_size(const std::string& s) { return std::stoul(s); }
std::uint64_t parse_u64(const std::string& s) { return std::stoull(s); }
nmer::StrategyKind parse_kind(const std::string& s) { return nmer::parse_strategy_kind(s); }

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training allocates and frees many mid-sized temporaries per gradient
  // step; without this glibc returns the heap top to the OS every time.
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
#endif
  CLI::App app{"Neighborhood mixup experience replay toolkit"};
  app.require_subcommand(1);

  // run
  CommonFlags run_flags;
  std::string run_strategy;
  std::uint64_t run_seed = 0;
  std::size_t run_rr = 0, run_k = 0;
  auto* run = app.add_subcommand("run", "train and evaluate one configuration");
  add_common(run, run_flags);
  auto* run_seed_opt = run->add_option("--seed", run_seed, "run seed");
  run->add_option("--strategy", run_strategy, "replay strategy");
  run->add_option("--replay-ratio", run_rr, "gradient steps per environment step");
  run->add_option("--k", run_k, "neighborhood size");
  bool run_quiet = false;
  run->add_flag("--quiet", run_quiet, "suppress per-evaluation progress");

  // grid
  CommonFlags grid_flags;
  std::string grid_strategies = "uniform,nmer", grid_ratios = "1,5,20", grid_ks = "10",
              grid_seeds = "0,1,2,3";
  std::size_t grid_jobs = 1;
  auto* grid = app.add_subcommand("grid", "run a strategy x replay ratio x k x seed grid");
  add_common(grid, grid_flags);
  grid->add_option("--strategy", grid_strategies, "comma-separated strategies");
  grid->add_option("--replay-ratio", grid_ratios, "comma-separated replay ratios");
  grid->add_option("--k", grid_ks, "comma-separated neighborhood sizes");
  grid->add_option("--seed", grid_seeds, "comma-separated seeds");
  grid->add_option("--jobs", grid_jobs, "parallel workers");

  // residuals
  CommonFlags res_flags;
  std::string res_buffer, res_strategy = "nmer";
  std::size_t res_k = 10, res_samples = 10000, res_batch = 1000;
  std::uint64_t res_seed = 0;
  auto* res = app.add_subcommand("residuals", "manifold residuals of a strategy on a buffer dump");
  add_common(res, res_flags);
  res->add_option("--buffer", res_buffer, "buffer dump file")->required();
  res->add_option("--strategy", res_strategy, "replay strategy");
  res->add_option("--k", res_k, "neighborhood size");
  res->add_option("--samples", res_samples, "number of interpolated items to report");
  res->add_option("--batch", res_batch, "batch size per draw");
  res->add_option("--seed", res_seed, "sampling seed");

  // smooth
  std::string smooth_in, smooth_out;
  std::size_t smooth_window = 11;
  auto* smo = app.add_subcommand("smooth", "recompute the smoothed column of a learning curve");
  smo->add_option("--in", smooth_in, "input curve CSV")->required();
  smo->add_option("--out", smooth_out, "output CSV (default: stdout)");
  smo->add_option("--window", smooth_window, "odd smoothing window");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      nmer::RunConfig cfg = build_config(run_flags);
      if (*run_seed_opt) cfg.seed = run_seed;
      if (!run_strategy.empty()) cfg.strategy.kind = nmer::parse_strategy_kind(run_strategy);
      if (run_rr) cfg.td3.replay_ratio = run_rr;
      if (run_k) cfg.strategy.k = run_k;
      if (!run_flags.out.empty()) cfg.out_dir = run_flags.out;
      nmer::RunHooks hooks;
      if (!run_quiet) {
        hooks.on_eval = [](std::uint64_t step, double ret) {
          std::fprintf(stderr, "step %llu  eval_return %.3f\n",
                       static_cast<unsigned long long>(step), ret);
        };
      }
      const auto result = nmer::run_experiment(cfg, hooks);
      std::printf("label=%s final_score=%.6f gradient_steps=%llu\n", cfg.run_label().c_str(),
                  result.final_score, static_cast<unsigned long long>(result.gradient_steps));
      if (!result.curve_path.empty()) std::printf("curve=%s\n", result.curve_path.c_str());
    } else if (*grid) {
      nmer::RunConfig cfg = build_config(grid_flags);
      if (!grid_flags.out.empty()) cfg.out_dir = grid_flags.out;
      nmer::GridSpec spec;
      spec.strategies = split_list<nmer::StrategyKind>(grid_strategies, parse_kind);
      spec.replay_ratios = split_list<std::size_t>(grid_ratios, parse_size);
      spec.ks = split_list<std::size_t>(grid_ks, parse_size);
      spec.seeds = split_list<std::uint64_t>(grid_seeds, parse_u64);
      spec.jobs = grid_jobs;
      const auto cells = nmer::run_grid(cfg, spec);
      if (!cfg.out_dir.empty()) {
        std::ofstream f(cfg.out_dir + "/summary.csv");
        nmer::write_grid_csv(f, cells);
      }
      nmer::write_grid_csv(std::cout, cells);
      for (const auto& c : cells) {
        for (const auto& e : c.errors) std::fprintf(stderr, "run failed: %s\n", e.c_str());
      }
    } else if (*res) {
      nmer::RunConfig cfg = build_config(res_flags);
      cfg.strategy.kind = nmer::parse_strategy_kind(res_strategy);
      cfg.strategy.k = res_k;
      const auto env = nmer::make_env(cfg.env);
      const auto restored = nmer::RingBuffer::restore(res_buffer);
      if (!(restored.spec() == env->spec())) {
        throw nmer::InvalidConfig("buffer dump dimensions do not match the environment");
      }
      nmer::ReplayMemory memory(restored.spec(), restored.size(), cfg.strategy);
      for (std::size_t slot : restored.slots_by_age()) memory.insert(restored.get(slot));
      nmer::Rng rng = nmer::make_stream(res_seed, 0);
      nmer::ResidualReport report;
      report.strategy = res_strategy;
      report.seed = res_seed;
      std::size_t drawn = 0;
      for (int round = 0; report.count() < res_samples && round < 1000; ++round) {
        const auto batch = memory.sample(res_batch, 0, rng);
        report.merge(nmer::residual(batch, *env, res_strategy, res_seed, drawn));
        drawn += batch.size();
      }
      if (report.count() > res_samples) {
        report.sample_ids.resize(res_samples);
        report.residuals.resize(res_samples);
        report.reward_residuals.resize(res_samples);
        report.state_residuals.resize(res_samples);
        report.summarize();
      }
      if (!res_flags.out.empty()) {
        std::ofstream f(res_flags.out);
        nmer::write_residual_csv(f, report);
      }
      std::printf("strategy=%s samples=%zu mean=%.6g median=%.6g p95=%.6g max=%.6g\n",
                  res_strategy.c_str(), report.count(), report.mean, report.median, report.p95,
                  report.max);
    } else if (*smo) {
      std::ifstream in(smooth_in);
      if (!in) throw nmer::InvalidInput("cannot open " + smooth_in);
      nmer::LearningCurve curve = nmer::read_curve_csv(in);
      curve.resmooth(smooth_window);
      if (smooth_out.empty()) {
        nmer::write_curve_csv(std::cout, curve);
      } else {
        std::ofstream out(smooth_out);
        nmer::write_curve_csv(out, curve);
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
