#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nmer/core.hpp"
#include "nmer/dense_net.hpp"
#include "nmer/replay.hpp"
#include "nmer/rng.hpp"

namespace nmer {

struct TD3Config {
  double actor_lr = 5e-4;
  double critic_lr = 5e-4;
  double tau = 0.005;
  double gamma = 0.99;
  std::uint64_t policy_delay = 2;
  // Noise magnitudes are in normalized action units ([-1, 1] per dimension)
  // and are scaled by each dimension's half range.
  double target_noise = 0.2;
  double target_noise_clip = 0.5;
  double exploration_noise_sd = 0.1;
  std::uint64_t random_steps = 1000;
  std::size_t batch_size = 100;
  std::size_t replay_ratio = 1;
  std::vector<std::size_t> actor_hidden{64, 64};
  std::vector<std::size_t> critic_hidden{64, 64};
  OptimizerKind optimizer = OptimizerKind::kSgd;

  void validate() const;
};

struct TD3Diagnostics {
  double critic_loss = 0.0;
  /// |Q1(s, a) - y| per batch item, before the critic step.
  std::vector<double> td_errors;
  bool actor_updated = false;
};

/// Twin-critic deterministic actor-critic learner with target policy
/// smoothing and delayed actor/target updates.
class TD3Agent {
 public:
  TD3Agent(SpaceSpec spec, TD3Config cfg, std::uint64_t seed);

  const SpaceSpec& spec() const { return spec_; }
  const TD3Config& config() const { return cfg_; }
  std::uint64_t gradient_steps() const { return steps_; }

  const DenseNet& actor() const { return actor_; }
  const DenseNet& critic1() const { return q1_; }
  const DenseNet& critic2() const { return q2_; }
  const DenseNet& target_actor() const { return actor_t_; }
  const DenseNet& target_critic1() const { return q1_t_; }
  const DenseNet& target_critic2() const { return q2_t_; }
  DenseNet& mutable_actor() { return actor_; }
  DenseNet& mutable_critic1() { return q1_; }
  DenseNet& mutable_critic2() { return q2_; }

  /// Copies every online network into its target.
  void sync_targets();

  /// Action for state s. Before random_steps environment steps an exploring
  /// call returns a uniform random action; otherwise the actor output, plus
  /// Gaussian noise and clipping when explore is set.
  std::vector<double> act(std::span<const double> s, bool explore, std::uint64_t env_step,
                          Rng& rng) const;

  /// Bootstrap targets y = r + gamma * (1 - done) * min(Q1', Q2') at the
  /// smoothed target action.
  std::vector<double> compute_targets(const TrainingBatch& batch, Rng& rng) const;

  TD3Diagnostics update(const TrainingBatch& batch, Rng& rng);

  /// Q-values of both online critics for the batch's (s, a).
  std::pair<std::vector<double>, std::vector<double>> q_values(const TrainingBatch& batch) const;

 private:
  struct Columns {
    Matrix s, a, s2, sa;
    Vector r, done, weight;
  };
  Columns split(const TrainingBatch& batch) const;
  Matrix clip_actions(Matrix a) const;

  SpaceSpec spec_;
  TD3Config cfg_;
  Vector center_, half_;
  DenseNet actor_, q1_, q2_;
  DenseNet actor_t_, q1_t_, q2_t_;
  Optimizer actor_opt_, q1_opt_, q2_opt_;
  std::uint64_t steps_ = 0;
};

}  // namespace nmer
