#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nmer/core.hpp"
#include "nmer/dense_net.hpp"
#include "nmer/rng.hpp"

namespace nmer {

struct StepResult {
  std::vector<double> s2;
  double r = 0.0;
  bool done = false;
};

/// Noise-free dynamics evaluated at an arbitrary (s, a).
struct ModelOutput {
  double r = 0.0;
  std::vector<double> s2;
};

/// Stateless continuous-control environment: the state is passed in and
/// returned, so one instance can serve any number of rollouts.
class Env {
 public:
  virtual ~Env() = default;

  virtual std::string name() const = 0;
  virtual const SpaceSpec& spec() const = 0;
  virtual std::uint64_t horizon() const = 0;
  /// True when step() is a pure function of (s, a).
  virtual bool deterministic() const = 0;

  virtual std::vector<double> reset(Rng& rng) const = 0;
  virtual StepResult step(std::span<const double> s, std::span<const double> a,
                          Rng& rng) const = 0;
  /// Deterministic part of step(), defined for any finite (s, a) including
  /// points off the reachable state set.
  virtual ModelOutput model(std::span<const double> s, std::span<const double> a) const = 0;
};

struct LinearEnvParams {
  Matrix A;  // ds x ds
  Matrix B;  // ds x da
  Vector w;  // ds + da
  double b = 0.0;
  double noise_sd = 0.0;
  std::uint64_t horizon = 200;
  double reset_bound = 1.0;  // reset state uniform in [-bound, bound]^ds
  double action_bound = 1.0;
};

/// Random stable system: A scaled to the given spectral radius, B standard
/// normal, w a random unit vector, b = 0.
LinearEnvParams make_linear_params(std::size_t state_dim, std::size_t action_dim,
                                   std::uint64_t seed, double spectral_radius = 0.95);

double spectral_radius(const Matrix& A);

/// s2 = A s + B a + noise, r = w . [s | a] + b. The map (s, a) -> (r, s2)
/// is affine, so every convex combination of its transitions is itself a
/// valid transition.
class LinearEnv final : public Env {
 public:
  explicit LinearEnv(LinearEnvParams params);

  std::string name() const override { return "linear"; }
  const SpaceSpec& spec() const override { return spec_; }
  std::uint64_t horizon() const override { return p_.horizon; }
  bool deterministic() const override { return p_.noise_sd == 0.0; }
  const LinearEnvParams& params() const { return p_; }

  std::vector<double> reset(Rng& rng) const override;
  StepResult step(std::span<const double> s, std::span<const double> a, Rng& rng) const override;
  ModelOutput model(std::span<const double> s, std::span<const double> a) const override;

 private:
  LinearEnvParams p_;
  SpaceSpec spec_;
};

struct PendulumParams {
  double mass = 1.0;
  double length = 1.0;
  double gravity = 10.0;
  double dt = 0.05;
  double max_torque = 2.0;
  double max_speed = 8.0;
  std::uint64_t horizon = 200;
};

/// Torque-limited pendulum with observation [cos th, sin th, th_dot]; th = 0
/// is upright. Reward -(wrap(th)^2 + 0.1 th_dot^2 + 0.001 u^2) <= 0.
class PendulumEnv final : public Env {
 public:
  explicit PendulumEnv(PendulumParams params = {});

  std::string name() const override { return "pendulum"; }
  const SpaceSpec& spec() const override { return spec_; }
  std::uint64_t horizon() const override { return p_.horizon; }
  bool deterministic() const override { return true; }
  const PendulumParams& params() const { return p_; }

  std::vector<double> reset(Rng& rng) const override;
  StepResult step(std::span<const double> s, std::span<const double> a, Rng& rng) const override;
  ModelOutput model(std::span<const double> s, std::span<const double> a) const override;

 private:
  PendulumParams p_;
  SpaceSpec spec_;
};

/// Wraps an angle into [-pi, pi).
double wrap_angle(double theta);

/// Energy-pumping swing-up with a linear stabilizer near the top.
struct SwingUpController {
  double energy_gain = 0.5;
  double capture_angle = 0.6;  // radians from upright
  double kp = 12.0;
  double kd = 2.5;

  std::vector<double> act(const PendulumParams& p, std::span<const double> s) const;
};

}  // namespace nmer
