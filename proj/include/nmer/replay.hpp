#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nmer/core.hpp"
#include "nmer/interpolation.hpp"
#include "nmer/moments.hpp"
#include "nmer/neighbor_index.hpp"
#include "nmer/ring_buffer.hpp"
#include "nmer/rng.hpp"
#include "nmer/sum_tree.hpp"

namespace nmer {

enum class StrategyKind { kUniform, kPer, kCt, kNmer, kKnn1Mixup, kNaiveMixup, kS4rl, kNoisy };

std::string_view to_string(StrategyKind kind);
StrategyKind parse_strategy_kind(std::string_view name);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::kUniform;
  std::size_t k = 10;
  bool exclude_self = true;
  MixupParams mixup;
  double per_alpha = 0.6;
  double per_beta_initial = 0.4;
  double per_beta_final = 0.4;
  std::uint64_t per_beta_anneal_steps = 20000;
  double per_epsilon = 1e-6;
  double noise_sigma_scale = 0.1;
  double interp_fraction = 1.0;
  /// Inserts between exact moment recomputations once the buffer is full.
  std::uint64_t recompute_interval = 10000;
  NeighborIndex::Backend index_backend = NeighborIndex::Backend::kTree;

  void validate() const;
  /// Neighborhood size the mixup family uses for a buffer of `count` items.
  std::size_t neighborhood_size(std::size_t count) const;
};

/// A training batch; flats are stored row-major, flat_dim values per item.
struct TrainingBatch {
  std::size_t flat_dim = 0;
  std::vector<double> flats;
  std::vector<std::uint8_t> dones;
  std::vector<double> importance_weights;
  /// Sampled slot per item (PER feedback goes here).
  std::vector<std::size_t> source_slots;
  /// Interpolation partner per item; equals the source slot when unmixed.
  std::vector<std::size_t> partner_slots;
  std::vector<std::uint8_t> interpolated;
  std::vector<double> lambdas;

  std::size_t size() const { return dones.size(); }
  std::span<const double> flat(std::size_t i) const {
    return std::span<const double>(flats).subspan(i * flat_dim, flat_dim);
  }
  std::span<double> flat(std::size_t i) {
    return std::span<double>(flats).subspan(i * flat_dim, flat_dim);
  }

  bool operator==(const TrainingBatch&) const = default;
};

/// PER annealing schedule: linear from initial to final over anneal_steps.
double per_beta(const StrategyConfig& cfg, std::uint64_t step);

/// (|delta| + epsilon)^alpha.
double per_priority(const StrategyConfig& cfg, double td_error);

/// Replay buffer plus everything the configured strategy needs: Z-score
/// moments, neighbor index, and PER sum tree.
class ReplayMemory {
 public:
  ReplayMemory(SpaceSpec spec, std::size_t capacity, StrategyConfig cfg);

  const StrategyConfig& config() const { return cfg_; }
  const RingBuffer& buffer() const { return buf_; }
  /// Moments of the [s | a] features.
  const RunningMoments& moments() const { return feature_moments_; }
  /// Moments of the whole flat vector (noise scale of the noisy strategy).
  const RunningMoments& flat_moments() const { return flat_moments_; }
  const NeighborIndex& index() const { return index_; }
  const SumTree* sum_tree() const { return tree_ ? &*tree_ : nullptr; }
  std::size_t size() const { return buf_.size(); }

  std::size_t insert(const Transition& t);

  /// Samples n items with the configured strategy. global_step drives the
  /// PER beta schedule; other strategies ignore it.
  TrainingBatch sample(std::size_t n, std::uint64_t global_step, Rng& rng) const;

  /// PER feedback; a no-op for every other strategy.
  void update_priorities(std::span<const std::size_t> slots, std::span<const double> td_errors);

  /// Smallest buffer size the configured strategy can sample from.
  std::size_t min_population() const;

 private:
  bool uses_index() const;

  StrategyConfig cfg_;
  RingBuffer buf_;
  RunningMoments feature_moments_;
  RunningMoments flat_moments_;
  NeighborIndex index_;
  std::optional<SumTree> tree_;
  std::uint64_t inserts_since_recompute_ = 0;
};

// Free-function forms of the individual strategies.
TrainingBatch sample_nmer_batch(const ReplayMemory& mem, const StrategyConfig& cfg,
                                std::size_t n, Rng& rng);
TrainingBatch sample_mixup_batch(const ReplayMemory& mem, const StrategyConfig& cfg,
                                 std::size_t n, Rng& rng);
TrainingBatch sample_per_batch(const ReplayMemory& mem, const StrategyConfig& cfg,
                               std::size_t n, std::uint64_t global_step, Rng& rng);
TrainingBatch sample_ct_batch(const ReplayMemory& mem, const StrategyConfig& cfg,
                              std::size_t n, Rng& rng);
TrainingBatch sample_s4rl_batch(const ReplayMemory& mem, const StrategyConfig& cfg,
                                std::size_t n, Rng& rng);
TrainingBatch sample_noisy_batch(const ReplayMemory& mem, const StrategyConfig& cfg,
                                 std::size_t n, Rng& rng);

}  // namespace nmer
