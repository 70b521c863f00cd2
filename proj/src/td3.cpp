#include "nmer/td3.hpp"

#include <algorithm>
#include <random>

#include "nmer/error.hpp"

namespace nmer {

namespace {

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden,
                                     std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

DenseNet make_actor(const SpaceSpec& spec, const TD3Config& cfg, Rng& rng, const Vector& center,
                    const Vector& half) {
  DenseNet net(layer_sizes(spec.state_dim, cfg.actor_hidden, spec.action_dim),
               OutputActivation::kTanh, rng);
  net.set_output_range(center, half);
  return net;
}

DenseNet make_critic(const SpaceSpec& spec, const TD3Config& cfg, Rng& rng) {
  return DenseNet(layer_sizes(spec.feature_dim(), cfg.critic_hidden, 1),
                  OutputActivation::kIdentity, rng);
}

Rng init_rng(std::uint64_t seed) { return make_stream(seed, 0x7d3); }

}  // namespace

void TD3Config::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidConfig("tau must lie in (0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidConfig("gamma must lie in [0, 1]");
  if (policy_delay < 1) throw InvalidConfig("policy_delay must be >= 1");
  if (!(actor_lr >= 0.0) || !(critic_lr >= 0.0)) throw InvalidConfig("learning rates must be >= 0");
  if (!(target_noise >= 0.0) || !(target_noise_clip >= 0.0) || !(exploration_noise_sd >= 0.0)) {
    throw InvalidConfig("noise scales must be >= 0");
  }
  if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
  if (replay_ratio < 1) throw InvalidConfig("replay_ratio must be >= 1");
}

TD3Agent::TD3Agent(SpaceSpec spec, TD3Config cfg, std::uint64_t seed)
    : spec_(std::move(spec)),
      cfg_(std::move(cfg)),
      actor_(DenseNet({1, 1}, OutputActivation::kTanh)),
      q1_(DenseNet({1, 1}, OutputActivation::kIdentity)),
      q2_(q1_),
      actor_t_(actor_),
      q1_t_(q1_),
      q2_t_(q1_),
      actor_opt_(actor_, {}),
      q1_opt_(q1_, {}),
      q2_opt_(q2_, {}) {
  spec_.validate();
  cfg_.validate();
  const auto da = static_cast<Eigen::Index>(spec_.action_dim);
  const Vector low = Vector::Map(spec_.action_low.data(), da);
  const Vector high = Vector::Map(spec_.action_high.data(), da);
  center_ = 0.5 * (low + high);
  half_ = 0.5 * (high - low);
  Rng rng = init_rng(seed);
  actor_ = make_actor(spec_, cfg_, rng, center_, half_);
  q1_ = make_critic(spec_, cfg_, rng);
  q2_ = make_critic(spec_, cfg_, rng);
  sync_targets();
  actor_opt_ = Optimizer(actor_, {cfg_.optimizer, cfg_.actor_lr});
  q1_opt_ = Optimizer(q1_, {cfg_.optimizer, cfg_.critic_lr});
  q2_opt_ = Optimizer(q2_, {cfg_.optimizer, cfg_.critic_lr});
}

void TD3Agent::sync_targets() {
  actor_t_ = actor_;
  q1_t_ = q1_;
  q2_t_ = q2_;
}

Matrix TD3Agent::clip_actions(Matrix a) const {
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double lo = spec_.action_low[static_cast<std::size_t>(r)];
    const double hi = spec_.action_high[static_cast<std::size_t>(r)];
    a.row(r) = a.row(r).cwiseMax(lo).cwiseMin(hi);
  }
  return a;
}

std::vector<double> TD3Agent::act(std::span<const double> s, bool explore, std::uint64_t env_step,
                                  Rng& rng) const {
  if (s.size() != spec_.state_dim) throw InvalidInput("state has wrong dimension");
  const std::size_t da = spec_.action_dim;
  std::vector<double> a(da);
  if (explore && env_step < cfg_.random_steps) {
    for (std::size_t j = 0; j < da; ++j) {
      std::uniform_real_distribution<double> u(spec_.action_low[j], spec_.action_high[j]);
      a[j] = u(rng);
    }
    return a;
  }
  const Matrix x = Matrix::Map(s.data(), static_cast<Eigen::Index>(s.size()), 1);
  Matrix out = actor_.forward(x);
  if (explore && cfg_.exploration_noise_sd > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t j = 0; j < da; ++j) {
      out(static_cast<Eigen::Index>(j), 0) +=
          cfg_.exploration_noise_sd * half_(static_cast<Eigen::Index>(j)) * normal(rng);
    }
  }
  out = clip_actions(std::move(out));
  for (std::size_t j = 0; j < da; ++j) a[j] = out(static_cast<Eigen::Index>(j), 0);
  return a;
}

TD3Agent::Columns TD3Agent::split(const TrainingBatch& batch) const {
  const std::size_t n = batch.size();
  if (n == 0) throw InvalidInput("empty training batch");
  if (batch.flat_dim != spec_.flat_dim()) throw InvalidInput("batch layout does not match agent");
  const auto ds = static_cast<Eigen::Index>(spec_.state_dim);
  const auto da = static_cast<Eigen::Index>(spec_.action_dim);
  const auto fd = static_cast<Eigen::Index>(spec_.flat_dim());
  const auto cols = static_cast<Eigen::Index>(n);
  Eigen::Map<const Matrix> flat(batch.flats.data(), fd, cols);
  Columns c;
  c.sa = flat.topRows(ds + da);
  c.s = flat.topRows(ds);
  c.a = flat.middleRows(ds, da);
  c.r = flat.row(ds + da).transpose();
  c.s2 = flat.bottomRows(ds);
  c.done.resize(cols);
  c.weight = Vector::Ones(cols);
  for (Eigen::Index i = 0; i < cols; ++i) {
    c.done(i) = batch.dones[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }
  if (!batch.importance_weights.empty()) {
    if (batch.importance_weights.size() != n) throw InvalidInput("one weight per item required");
    c.weight = Vector::Map(batch.importance_weights.data(), cols);
  }
  return c;
}

namespace {

Matrix stack(const Matrix& top, const Matrix& bottom) {
  Matrix m(top.rows() + bottom.rows(), top.cols());
  m << top, bottom;
  return m;
}

}  // namespace

std::vector<double> TD3Agent::compute_targets(const TrainingBatch& batch, Rng& rng) const {
  const Columns c = split(batch);
  Matrix a2 = actor_t_.forward(c.s2);
  if (cfg_.target_noise > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index col = 0; col < a2.cols(); ++col) {
      for (Eigen::Index r = 0; r < a2.rows(); ++r) {
        const double eps = std::clamp(cfg_.target_noise * normal(rng), -cfg_.target_noise_clip,
                                      cfg_.target_noise_clip);
        a2(r, col) += eps * half_(r);
      }
    }
  }
  a2 = clip_actions(std::move(a2));
  const Matrix sa2 = stack(c.s2, a2);
  const Matrix q1 = q1_t_.forward(sa2);
  const Matrix q2 = q2_t_.forward(sa2);
  std::vector<double> y(static_cast<std::size_t>(c.r.size()));
  for (Eigen::Index i = 0; i < c.r.size(); ++i) {
    const double q_min = std::min(q1(0, i), q2(0, i));
    y[static_cast<std::size_t>(i)] =
        c.done(i) != 0.0 ? c.r(i) : c.r(i) + cfg_.gamma * q_min;
  }
  return y;
}

std::pair<std::vector<double>, std::vector<double>> TD3Agent::q_values(
    const TrainingBatch& batch) const {
  const Columns c = split(batch);
  const Matrix q1 = q1_.forward(c.sa);
  const Matrix q2 = q2_.forward(c.sa);
  return {std::vector<double>(q1.data(), q1.data() + q1.size()),
          std::vector<double>(q2.data(), q2.data() + q2.size())};
}

TD3Diagnostics TD3Agent::update(const TrainingBatch& batch, Rng& rng) {
  const Columns c = split(batch);
  const auto n = c.r.size();
  const std::vector<double> y_vec = compute_targets(batch, rng);
  const Eigen::RowVectorXd y = Eigen::RowVectorXd::Map(y_vec.data(), n);
  const Eigen::RowVectorXd w = c.weight.transpose();
  const double inv_n = 1.0 / static_cast<double>(n);

  DenseNet::Cache cache1, cache2;
  const Matrix q1 = q1_.forward(c.sa, cache1);
  const Matrix q2 = q2_.forward(c.sa, cache2);
  const Eigen::RowVectorXd d1 = q1.row(0) - y;
  const Eigen::RowVectorXd d2 = q2.row(0) - y;

  TD3Diagnostics diag;
  diag.critic_loss =
      (w.cwiseProduct(d1.cwiseAbs2()).sum() + w.cwiseProduct(d2.cwiseAbs2()).sum()) * inv_n;
  diag.td_errors.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) diag.td_errors[static_cast<std::size_t>(i)] = std::abs(d1(i));

  const Matrix g1 = (2.0 * inv_n) * w.cwiseProduct(d1);
  const Matrix g2 = (2.0 * inv_n) * w.cwiseProduct(d2);
  q1_opt_.step(q1_, q1_.backward(cache1, g1));
  q2_opt_.step(q2_, q2_.backward(cache2, g2));

  ++steps_;
  if (steps_ % cfg_.policy_delay == 0) {
    // Actor loss -mean Q1(s, actor(s)); gradient flows through the critic's
    // action inputs into the actor.
    DenseNet::Cache actor_cache, critic_cache;
    const Matrix a_pi = actor_.forward(c.s, actor_cache);
    q1_.forward(stack(c.s, a_pi), critic_cache);
    Matrix d_input;
    q1_.backward(critic_cache, Matrix::Constant(1, n, -inv_n), &d_input);
    const Matrix d_action = d_input.bottomRows(static_cast<Eigen::Index>(spec_.action_dim));
    actor_opt_.step(actor_, actor_.backward(actor_cache, d_action));

    polyak(actor_t_, actor_, cfg_.tau);
    polyak(q1_t_, q1_, cfg_.tau);
    polyak(q2_t_, q2_, cfg_.tau);
    diag.actor_updated = true;
  }
  return diag;
}

}  // namespace nmer
