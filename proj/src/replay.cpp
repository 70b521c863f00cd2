#include "nmer/replay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "nmer/error.hpp"

namespace nmer {

namespace {

constexpr std::pair<StrategyKind, std::string_view> kKindNames[] = {
    {StrategyKind::kUniform, "uniform"},       {StrategyKind::kPer, "per"},
    {StrategyKind::kCt, "ct"},                 {StrategyKind::kNmer, "nmer"},
    {StrategyKind::kKnn1Mixup, "knn1_mixup"},  {StrategyKind::kNaiveMixup, "naive_mixup"},
    {StrategyKind::kS4rl, "s4rl"},             {StrategyKind::kNoisy, "noisy"},
};

bool is_mixup_family(StrategyKind kind) {
  return kind == StrategyKind::kNmer || kind == StrategyKind::kKnn1Mixup ||
         kind == StrategyKind::kNaiveMixup;
}

}  // namespace

std::string_view to_string(StrategyKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

StrategyKind parse_strategy_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw InvalidConfig("unknown strategy kind '" + std::string(name) + "'");
}

void StrategyConfig::validate() const {
  if (k < 1) throw InvalidConfig("k must be ≥ 1");
  mixup.validate();
  if (!(per_alpha >= 0.0)) throw InvalidConfig("per_alpha must be >= 0");
  if (!(per_beta_initial >= 0.0 && per_beta_initial <= 1.0) ||
      !(per_beta_final >= 0.0 && per_beta_final <= 1.0)) {
    throw InvalidConfig("PER beta must lie in [0, 1]");
  }
  if (!(per_epsilon > 0.0)) throw InvalidConfig("per_epsilon must be > 0");
  if (!(noise_sigma_scale >= 0.0)) throw InvalidConfig("noise_sigma_scale must be >= 0");
  if (!(interp_fraction >= 0.0 && interp_fraction <= 1.0)) {
    throw InvalidConfig("interp_fraction must lie in [0, 1]");
  }
  if (recompute_interval < 1) throw InvalidConfig("recompute_interval must be >= 1");
}

std::size_t StrategyConfig::neighborhood_size(std::size_t count) const {
  switch (kind) {
    case StrategyKind::kKnn1Mixup:
      return 1;
    case StrategyKind::kNaiveMixup:
      return count > 0 ? count - (exclude_self ? 1 : 0) : 0;
    default:
      return k;
  }
}

double per_beta(const StrategyConfig& cfg, std::uint64_t step) {
  if (cfg.per_beta_anneal_steps == 0) return cfg.per_beta_final;
  const double frac =
      std::min(1.0, static_cast<double>(step) / static_cast<double>(cfg.per_beta_anneal_steps));
  return cfg.per_beta_initial + frac * (cfg.per_beta_final - cfg.per_beta_initial);
}

double per_priority(const StrategyConfig& cfg, double td_error) {
  return std::pow(std::abs(td_error) + cfg.per_epsilon, cfg.per_alpha);
}

namespace {

TrainingBatch empty_batch(std::size_t flat_dim, std::size_t n) {
  TrainingBatch b;
  b.flat_dim = flat_dim;
  b.flats.reserve(n * flat_dim);
  b.dones.reserve(n);
  b.importance_weights.reserve(n);
  b.source_slots.reserve(n);
  b.partner_slots.reserve(n);
  b.interpolated.reserve(n);
  b.lambdas.reserve(n);
  return b;
}

void push_raw(TrainingBatch& b, const RingBuffer& buf, std::size_t slot) {
  auto f = buf.flat(slot);
  b.flats.insert(b.flats.end(), f.begin(), f.end());
  b.dones.push_back(buf.done(slot) ? 1 : 0);
  b.importance_weights.push_back(1.0);
  b.source_slots.push_back(slot);
  b.partner_slots.push_back(slot);
  b.interpolated.push_back(0);
  b.lambdas.push_back(1.0);
}

// Appends an item mixing `slot` with `partner`; the partner's done flag is
// never inherited because both endpoints are non-terminal by construction.
void push_mixed(TrainingBatch& b, const RingBuffer& buf, std::size_t slot, std::size_t partner,
                double lambda) {
  const std::size_t d = buf.spec().flat_dim();
  b.flats.resize(b.flats.size() + d);
  mixup_into(buf.flat(slot), buf.flat(partner), lambda,
             std::span<double>(b.flats).subspan(b.flats.size() - d, d));
  b.dones.push_back(0);
  b.importance_weights.push_back(1.0);
  b.source_slots.push_back(slot);
  b.partner_slots.push_back(partner);
  b.interpolated.push_back(1);
  b.lambdas.push_back(lambda);
}

TrainingBatch raw_batch(const RingBuffer& buf, std::span<const std::size_t> slots) {
  TrainingBatch b = empty_batch(buf.spec().flat_dim(), slots.size());
  for (std::size_t s : slots) push_raw(b, buf, s);
  return b;
}

// Which batch items get interpolated: all for fraction 1, none for 0, else a
// random subset of round(fraction * n) items.
std::vector<std::uint8_t> choose_interpolated(double fraction, std::size_t n, Rng& rng) {
  if (fraction >= 1.0) return std::vector<std::uint8_t>(n, 1);
  std::vector<std::uint8_t> mask(n, 0);
  if (fraction <= 0.0 || n == 0) return mask;
  const auto m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
    mask[order[i]] = 1;
  }
  return mask;
}

TrainingBatch mixup_family(const RingBuffer& buf, const RunningMoments& moments,
                           const NeighborIndex& index, const StrategyConfig& cfg, std::size_t k,
                           std::size_t n, Rng& rng) {
  if (n == 0) return empty_batch(buf.spec().flat_dim(), 0);
  const std::size_t needed = k + (cfg.exclude_self ? 1 : 0);
  if (k < 1 || buf.size() < needed) {
    throw InsufficientPopulation("strategy " + std::string(to_string(cfg.kind)) + " with k=" +
                                 std::to_string(k) + " needs " + std::to_string(needed) +
                                 " stored transitions, have " + std::to_string(buf.size()));
  }
  const auto slots = buf.sample_uniform(n, rng);
  const auto mask = choose_interpolated(cfg.interp_fraction, n, rng);
  TrainingBatch b = empty_batch(buf.spec().flat_dim(), n);
  const LocalMixupOptions opts{k, cfg.exclude_self, cfg.mixup};
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) {
      push_raw(b, buf, slots[i]);
      continue;
    }
    auto out = local_mixup(buf, moments, index, slots[i], opts, rng);
    if (out.was_interpolated) {
      push_mixed(b, buf, out.source_slots.first, out.source_slots.second, out.lambda_used);
    } else {
      push_raw(b, buf, slots[i]);
    }
  }
  return b;
}

TrainingBatch per_batch(const RingBuffer& buf, const SumTree& tree, const StrategyConfig& cfg,
                        std::size_t n, std::uint64_t step, Rng& rng) {
  if (buf.empty() || !(tree.total() > 0.0)) throw EmptyBuffer();
  TrainingBatch b = empty_batch(buf.spec().flat_dim(), n);
  const double total = tree.total();
  const double beta = per_beta(cfg, step);
  const double count = static_cast<double>(buf.size());
  std::uniform_real_distribution<double> mass(0.0, total);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t slot = std::min(tree.find(mass(rng)), buf.size() - 1);
    push_raw(b, buf, slot);
    const double p = tree.get(slot) / total;
    b.importance_weights.back() = std::pow(count * p, -beta);
  }
  if (n > 0) {
    const double w_max = *std::max_element(b.importance_weights.begin(), b.importance_weights.end());
    for (double& w : b.importance_weights) w /= w_max;
  }
  return b;
}

TrainingBatch ct_batch(const RingBuffer& buf, const StrategyConfig& cfg, std::size_t n, Rng& rng) {
  const auto slots = buf.sample_uniform(n, rng);
  TrainingBatch b = empty_batch(buf.spec().flat_dim(), n);
  for (std::size_t slot : slots) {
    const auto next = buf.successor(slot);
    if (!next || buf.done(slot) || buf.done(*next)) {
      push_raw(b, buf, slot);
      continue;
    }
    push_mixed(b, buf, slot, *next, draw_lambda(cfg.mixup, rng));
  }
  return b;
}

TrainingBatch s4rl_batch(const RingBuffer& buf, const StrategyConfig& cfg, std::size_t n,
                         Rng& rng) {
  const auto slots = buf.sample_uniform(n, rng);
  const SpaceSpec& spec = buf.spec();
  const std::size_t ds = spec.state_dim;
  TrainingBatch b = empty_batch(spec.flat_dim(), n);
  for (std::size_t slot : slots) {
    push_raw(b, buf, slot);
    if (buf.done(slot)) continue;
    const double lambda = draw_lambda(cfg.mixup, rng);
    auto row = b.flat(b.size() - 1);
    auto src = buf.flat(slot);
    mixup_into(src.first(ds), src.subspan(spec.next_state_offset(), ds), lambda, row.first(ds));
    b.interpolated.back() = 1;
    b.lambdas.back() = lambda;
  }
  return b;
}

TrainingBatch noisy_batch(const RingBuffer& buf, const RunningMoments& flat_moments,
                          const StrategyConfig& cfg, std::size_t n, Rng& rng) {
  const auto slots = buf.sample_uniform(n, rng);
  TrainingBatch b = raw_batch(buf, slots);
  if (cfg.noise_sigma_scale == 0.0) return b;
  const std::size_t d = buf.spec().flat_dim();
  std::vector<double> sigma(d);
  for (std::size_t j = 0; j < d; ++j) sigma[j] = cfg.noise_sigma_scale * flat_moments.stddev(j);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = b.flat(i);
    for (std::size_t j = 0; j < d; ++j) row[j] += sigma[j] * normal(rng);
  }
  return b;
}

}  // namespace

ReplayMemory::ReplayMemory(SpaceSpec spec, std::size_t capacity, StrategyConfig cfg)
    : cfg_(std::move(cfg)),
      buf_(std::move(spec), capacity),
      feature_moments_(buf_.spec().feature_dim()),
      flat_moments_(buf_.spec().flat_dim()),
      index_(cfg_.index_backend) {
  cfg_.validate();
  if (cfg_.kind == StrategyKind::kPer) tree_.emplace(capacity);
}

bool ReplayMemory::uses_index() const {
  return cfg_.kind == StrategyKind::kNmer || cfg_.kind == StrategyKind::kKnn1Mixup;
}

std::size_t ReplayMemory::insert(const Transition& t) {
  const std::size_t slot = buf_.insert(t);
  auto flat = buf_.flat(slot);
  feature_moments_.update(flat.first(buf_.spec().feature_dim()));
  flat_moments_.update(flat);
  if (buf_.full() && ++inserts_since_recompute_ >= cfg_.recompute_interval) {
    // Evicted points are never subtracted from the running sums; an exact
    // recomputation periodically drops them.
    feature_moments_.recompute_full(buf_, MomentsScope::kFeatures);
    flat_moments_.recompute_full(buf_, MomentsScope::kFlat);
    inserts_since_recompute_ = 0;
  }
  if (uses_index()) index_.on_insert(buf_, feature_moments_, slot);
  if (tree_) tree_->set(slot, tree_->max_priority());
  return slot;
}

std::size_t ReplayMemory::min_population() const {
  if (is_mixup_family(cfg_.kind)) {
    const std::size_t k = cfg_.kind == StrategyKind::kNmer ? cfg_.k : 1;
    return k + (cfg_.exclude_self ? 1 : 0);
  }
  return 1;
}

TrainingBatch ReplayMemory::sample(std::size_t n, std::uint64_t global_step, Rng& rng) const {
  switch (cfg_.kind) {
    case StrategyKind::kUniform:
      return raw_batch(buf_, buf_.sample_uniform(n, rng));
    case StrategyKind::kPer:
      return per_batch(buf_, *tree_, cfg_, n, global_step, rng);
    case StrategyKind::kCt:
      return ct_batch(buf_, cfg_, n, rng);
    case StrategyKind::kNmer:
    case StrategyKind::kKnn1Mixup:
    case StrategyKind::kNaiveMixup:
      return mixup_family(buf_, feature_moments_, index_, cfg_,
                          cfg_.neighborhood_size(buf_.size()), n, rng);
    case StrategyKind::kS4rl:
      return s4rl_batch(buf_, cfg_, n, rng);
    case StrategyKind::kNoisy:
      return noisy_batch(buf_, flat_moments_, cfg_, n, rng);
  }
  throw InvalidConfig("unhandled strategy kind");
}

void ReplayMemory::update_priorities(std::span<const std::size_t> slots,
                                     std::span<const double> td_errors) {
  if (!tree_) return;
  if (slots.size() != td_errors.size()) {
    throw InvalidInput("priority update needs one TD error per slot");
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i] >= buf_.size()) throw InvalidInput("priority update for unoccupied slot");
    if (!std::isfinite(td_errors[i])) throw InvalidInput("TD error is not finite");
    tree_->set(slots[i], per_priority(cfg_, td_errors[i]));
  }
}

TrainingBatch sample_nmer_batch(const ReplayMemory& mem, const StrategyConfig& cfg,
                                std::size_t n, Rng& rng) {
  cfg.validate();
  return mixup_family(mem.buffer(), mem.moments(), mem.index(), cfg,
                      cfg.neighborhood_size(mem.size()), n, rng);
}

TrainingBatch sample_mixup_batch(const ReplayMemory& mem, const StrategyConfig& cfg,
                                 std::size_t n, Rng& rng) {
  if (cfg.kind != StrategyKind::kKnn1Mixup && cfg.kind != StrategyKind::kNaiveMixup) {
    throw InvalidConfig("sample_mixup_batch needs knn1_mixup or naive_mixup");
  }
  return sample_nmer_batch(mem, cfg, n, rng);
}

TrainingBatch sample_per_batch(const ReplayMemory& mem, const StrategyConfig& cfg,
                               std::size_t n, std::uint64_t global_step, Rng& rng) {
  if (!mem.sum_tree()) throw InvalidConfig("memory was not created with the per strategy");
  return per_batch(mem.buffer(), *mem.sum_tree(), cfg, n, global_step, rng);
}

TrainingBatch sample_ct_batch(const ReplayMemory& mem, const StrategyConfig& cfg,
                              std::size_t n, Rng& rng) {
  return ct_batch(mem.buffer(), cfg, n, rng);
}

TrainingBatch sample_s4rl_batch(const ReplayMemory& mem, const StrategyConfig& cfg,
                                std::size_t n, Rng& rng) {
  return s4rl_batch(mem.buffer(), cfg, n, rng);
}

TrainingBatch sample_noisy_batch(const ReplayMemory& mem, const StrategyConfig& cfg,
                                 std::size_t n, Rng& rng) {
  return noisy_batch(mem.buffer(), mem.flat_moments(), cfg, n, rng);
}

}  // namespace nmer
