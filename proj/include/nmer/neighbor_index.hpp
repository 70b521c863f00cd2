#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace nmer {

class RingBuffer;
class RunningMoments;

struct NeighborQuery {
  std::size_t query_slot = 0;
  std::size_t k = 1;
  bool exclude_self = true;
};

/// Squared Euclidean distance between the Z-scored features of two slots.
double standardized_distance2(const RingBuffer& buf, const RunningMoments& moments,
                              std::size_t a, std::size_t b);

/// Reference exact k-NN: linear scan over every occupied slot. Results are
/// ordered by ascending distance, ties by ascending insert counter.
std::vector<std::size_t> knn_scan(const RingBuffer& buf, const RunningMoments& moments,
                                  const NeighborQuery& q);

/// Exact k-NN over Z-scored [s | a] features.
///
/// The tree backend partitions raw feature coordinates, which do not move
/// when the moments change, and prunes with box bounds evaluated in
/// Z-score space at query time. Box bounds are computed with the same
/// floating-point expressions as point distances, so a bound never exceeds
/// the distance of a point inside the box and pruning loses nothing.
/// Inserts since the last build are kept in a pending list and scanned
/// linearly; the tree is rebuilt once that list grows past a threshold.
class NeighborIndex {
 public:
  enum class Backend { kScan, kTree };

  explicit NeighborIndex(Backend backend = Backend::kTree, std::size_t leaf_size = 16,
                         std::size_t rebuild_threshold = 256);

  Backend backend() const { return backend_; }

  /// Must be called after every buffer insert.
  void on_insert(const RingBuffer& buf, const RunningMoments& moments, std::size_t slot);
  void rebuild(const RingBuffer& buf, const RunningMoments& moments);

  std::vector<std::size_t> knn(const RingBuffer& buf, const RunningMoments& moments,
                               const NeighborQuery& q) const;

 private:
  struct Entry {
    std::size_t slot;
    std::uint64_t counter;
  };
  struct Node {
    std::size_t begin = 0, end = 0;  // range into entries_ (leaves only)
    std::size_t left = 0, right = 0;  // child node ids, 0 = leaf
  };
  class Candidates;

  std::size_t build(const RingBuffer& buf, const RunningMoments& moments, std::size_t begin,
                    std::size_t end);
  void search(const RingBuffer& buf, const RunningMoments& moments, std::size_t node,
              const std::vector<double>& q_raw, const std::vector<double>& q_z,
              const NeighborQuery& q, Candidates& best) const;

  Backend backend_;
  std::size_t leaf_size_;
  std::size_t rebuild_threshold_;
  std::size_t dim_ = 0;
  std::vector<Entry> entries_;
  std::vector<Node> nodes_;
  std::vector<double> box_lo_, box_hi_;  // dim_ values per node
  std::vector<Entry> pending_;
  std::uint64_t synced_inserts_ = 0;
};

}  // namespace nmer
