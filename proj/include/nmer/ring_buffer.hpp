#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nmer/core.hpp"
#include "nmer/rng.hpp"

namespace nmer {

/// Fixed-capacity FIFO transition store.
///
/// Slots fill in order 0..capacity-1 and are then overwritten oldest-first,
/// so the occupied slots are always [0, size()). Encoded transitions live in
/// one contiguous row-major block; the leading feature_dim() entries of each
/// row are the [s | a] neighbor-search features.
class RingBuffer {
 public:
  RingBuffer(SpaceSpec spec, std::size_t capacity);

  const SpaceSpec& spec() const { return spec_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  bool full() const { return count_ == capacity_; }
  std::size_t write_head() const { return head_; }
  /// Number of inserts ever performed.
  std::uint64_t total_inserts() const { return next_counter_; }

  /// Stores t, evicting the oldest transition when full. Returns the slot.
  std::size_t insert(const Transition& t);

  /// n slots drawn i.i.d. uniformly (with replacement) over occupied slots.
  std::vector<std::size_t> sample_uniform(std::size_t n, Rng& rng) const;

  /// Slot of the same-episode transition with step_idx + 1, if still stored.
  std::optional<std::size_t> successor(std::size_t slot) const;

  std::span<const double> flat(std::size_t slot) const;
  std::span<const double> features(std::size_t slot) const;
  bool done(std::size_t slot) const;
  std::uint64_t episode_id(std::size_t slot) const;
  std::uint64_t step_idx(std::size_t slot) const;
  /// Insert sequence number of the transition currently in slot.
  std::uint64_t insert_counter(std::size_t slot) const;
  Transition get(std::size_t slot) const;

  /// Occupied slots ordered oldest to newest.
  std::vector<std::size_t> slots_by_age() const;

  /// Text dump: a header line declaring the dimensions, then one line per
  /// transition (oldest first): flat values, done, episode_id, step_idx.
  void dump(std::ostream& out) const;
  void dump(const std::string& path) const;
  /// Rebuilds a buffer from a dump. capacity 0 means "exactly the record count".
  static RingBuffer restore(std::istream& in, std::size_t capacity = 0);
  static RingBuffer restore(const std::string& path, std::size_t capacity = 0);

 private:
  struct KeyHash {
    std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& k) const {
      return std::hash<std::uint64_t>{}(k.first * 0x9E3779B97F4A7C15ULL ^ k.second);
    }
  };

  void check_slot(std::size_t slot) const;

  SpaceSpec spec_;
  std::size_t capacity_;
  std::size_t flat_dim_;
  std::size_t count_ = 0;
  std::size_t head_ = 0;
  std::uint64_t next_counter_ = 0;
  std::vector<double> flats_;
  std::vector<std::uint8_t> done_;
  std::vector<std::uint64_t> episode_;
  std::vector<std::uint64_t> step_;
  std::vector<std::uint64_t> counter_;
  std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, std::size_t, KeyHash> by_key_;
};

}  // namespace nmer
