#include "nmer/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "nmer/error.hpp"

namespace nmer {

namespace {

void check_sizes(const SpaceSpec& spec, std::span<const double> s, std::span<const double> a) {
  if (s.size() != spec.state_dim) throw InvalidInput("state has wrong dimension");
  if (a.size() != spec.action_dim) throw InvalidInput("action has wrong dimension");
}

}  // namespace

double spectral_radius(const Matrix& A) {
  Eigen::EigenSolver<Matrix> solver(A, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

LinearEnvParams make_linear_params(std::size_t state_dim, std::size_t action_dim,
                                   std::uint64_t seed, double target_radius) {
  Rng rng = make_stream(seed, 0x11ea7);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto ds = static_cast<Eigen::Index>(state_dim);
  const auto da = static_cast<Eigen::Index>(action_dim);
  LinearEnvParams p;
  p.A.resize(ds, ds);
  for (Eigen::Index c = 0; c < ds; ++c) {
    for (Eigen::Index r = 0; r < ds; ++r) p.A(r, c) = normal(rng);
  }
  const double rho = spectral_radius(p.A);
  if (rho > 0.0) p.A *= target_radius / rho;
  p.B.resize(ds, da);
  for (Eigen::Index c = 0; c < da; ++c) {
    for (Eigen::Index r = 0; r < ds; ++r) p.B(r, c) = normal(rng);
  }
  p.w.resize(ds + da);
  for (Eigen::Index i = 0; i < ds + da; ++i) p.w(i) = normal(rng);
  p.w.normalize();
  return p;
}

LinearEnv::LinearEnv(LinearEnvParams params) : p_(std::move(params)) {
  const auto ds = static_cast<std::size_t>(p_.A.rows());
  if (p_.A.cols() != p_.A.rows() || ds == 0) throw InvalidParameter("A must be square");
  if (static_cast<std::size_t>(p_.B.rows()) != ds || p_.B.cols() < 1) {
    throw InvalidParameter("B must have one row per state dimension");
  }
  const auto da = static_cast<std::size_t>(p_.B.cols());
  if (static_cast<std::size_t>(p_.w.size()) != ds + da) {
    throw InvalidParameter("w must have state_dim + action_dim entries");
  }
  if (spectral_radius(p_.A) > 1.0 + 1e-12) throw InvalidParameter("A must have spectral radius <= 1");
  if (!(p_.noise_sd >= 0.0)) throw InvalidParameter("noise_sd must be >= 0");
  spec_ = make_space(ds, da, p_.action_bound);
}

std::vector<double> LinearEnv::reset(Rng& rng) const {
  std::uniform_real_distribution<double> u(-p_.reset_bound, p_.reset_bound);
  std::vector<double> s(spec_.state_dim);
  for (double& v : s) v = u(rng);
  return s;
}

ModelOutput LinearEnv::model(std::span<const double> s, std::span<const double> a) const {
  check_sizes(spec_, s, a);
  const auto ds = static_cast<Eigen::Index>(spec_.state_dim);
  const auto da = static_cast<Eigen::Index>(spec_.action_dim);
  const Eigen::Map<const Vector> sv(s.data(), ds);
  const Eigen::Map<const Vector> av(a.data(), da);
  const Vector next = p_.A * sv + p_.B * av;
  ModelOutput out;
  out.r = p_.w.head(ds).dot(sv) + p_.w.tail(da).dot(av) + p_.b;
  out.s2.assign(next.data(), next.data() + next.size());
  return out;
}

StepResult LinearEnv::step(std::span<const double> s, std::span<const double> a, Rng& rng) const {
  ModelOutput m = model(s, a);
  if (p_.noise_sd > 0.0) {
    std::normal_distribution<double> normal(0.0, p_.noise_sd);
    for (double& v : m.s2) v += normal(rng);
  }
  return {std::move(m.s2), m.r, false};
}

double wrap_angle(double theta) {
  constexpr double pi = std::numbers::pi;
  double t = std::fmod(theta + pi, 2.0 * pi);
  if (t < 0.0) t += 2.0 * pi;
  return t - pi;
}

PendulumEnv::PendulumEnv(PendulumParams params) : p_(params) {
  if (!(p_.mass > 0.0 && p_.length > 0.0 && p_.dt > 0.0 && p_.max_torque > 0.0 &&
        p_.max_speed > 0.0)) {
    throw InvalidParameter("pendulum parameters must be positive");
  }
  spec_ = make_space(3, 1, p_.max_torque);
}

std::vector<double> PendulumEnv::reset(Rng& rng) const {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> speed(-1.0, 1.0);
  const double th = angle(rng);
  const double thdot = speed(rng);
  return {std::cos(th), std::sin(th), thdot};
}

ModelOutput PendulumEnv::model(std::span<const double> s, std::span<const double> a) const {
  check_sizes(spec_, s, a);
  const double th = std::atan2(s[1], s[0]);
  const double thdot = s[2];
  const double u = std::clamp(a[0], -p_.max_torque, p_.max_torque);
  const double g = p_.gravity, l = p_.length, m = p_.mass, dt = p_.dt;
  const double wrapped = wrap_angle(th);
  ModelOutput out;
  out.r = -(wrapped * wrapped + 0.1 * thdot * thdot + 0.001 * u * u);
  double new_thdot = thdot + (3.0 * g / (2.0 * l) * std::sin(th) + 3.0 / (m * l * l) * u) * dt;
  new_thdot = std::clamp(new_thdot, -p_.max_speed, p_.max_speed);
  const double new_th = th + new_thdot * dt;
  out.s2 = {std::cos(new_th), std::sin(new_th), new_thdot};
  return out;
}

StepResult PendulumEnv::step(std::span<const double> s, std::span<const double> a, Rng&) const {
  check_sizes(spec_, s, a);
  if (std::abs(s[0] * s[0] + s[1] * s[1] - 1.0) > 1e-6) {
    throw InvalidInput("pendulum state must satisfy cos^2 + sin^2 = 1");
  }
  ModelOutput m = model(s, a);
  return {std::move(m.s2), m.r, false};
}

std::vector<double> SwingUpController::act(const PendulumParams& p,
                                           std::span<const double> s) const {
  // th_ddot = a sin(th) + b u, so E = th_dot^2 / 2 + a cos(th) is conserved
  // without torque and E = a at the upright rest state.
  const double a = 3.0 * p.gravity / (2.0 * p.length);
  const double b = 3.0 / (p.mass * p.length * p.length);
  const double th = std::atan2(s[1], s[0]);
  const double thdot = s[2];
  double u;
  if (std::abs(th) < capture_angle) {
    u = -(kp * th + kd * thdot);
  } else {
    const double energy = 0.5 * thdot * thdot + a * std::cos(th);
    u = energy_gain * (a - energy) * thdot / b;
    if (thdot == 0.0 && energy < a) u = p.max_torque;
  }
  return {std::clamp(u, -p.max_torque, p.max_torque)};
}

}  // namespace nmer
