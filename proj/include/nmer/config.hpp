#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "nmer/envs.hpp"
#include "nmer/replay.hpp"
#include "nmer/td3.hpp"

namespace nmer {

struct EnvConfig {
  std::string name = "pendulum";  // "pendulum" or "linear"
  PendulumParams pendulum;
  std::size_t linear_state_dim = 4;
  std::size_t linear_action_dim = 2;
  std::uint64_t linear_seed = 0;  // draws A, B and w
  double linear_spectral_radius = 0.95;
  double linear_noise_sd = 0.0;
  std::uint64_t horizon = 200;
};

std::unique_ptr<Env> make_env(const EnvConfig& cfg);

struct RunConfig {
  EnvConfig env;
  StrategyConfig strategy;
  TD3Config td3;
  std::size_t buffer_capacity = 1000000;
  std::uint64_t total_env_steps = 50000;
  std::uint64_t eval_interval = 1000;
  std::uint64_t eval_episodes = 5;
  std::size_t smoothing_window = 11;
  std::uint64_t seed = 0;
  std::string out_dir;  // empty: write nothing
  std::string label;    // empty: derived from strategy, ratio, k and seed
  bool dump_buffer = false;

  void validate() const;
  std::string run_label() const;
};

/// Parses flat `key = value` lines; '#' starts a comment. Keys are
/// namespaced (env.*, strategy.*, per.*, td3.*, buffer.*, run.*) and
/// unknown keys are errors.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Applies one setting; throws InvalidConfig for unknown keys or bad values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Every recognized key, in a stable order.
std::vector<std::string> config_keys();

/// Serializes cfg in the format parse_config reads.
std::string format_config(const RunConfig& cfg);

}  // namespace nmer
