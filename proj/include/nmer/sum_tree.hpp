#pragma once

#include <cstddef>
#include <vector>

namespace nmer {

/// Binary tree of partial priority sums over a fixed number of leaves.
/// Parents are recomputed from their children on every write, so each
/// internal node is exactly the floating-point sum of its two children.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  double total() const { return nodes_[1]; }
  double get(std::size_t leaf) const;
  void set(std::size_t leaf, double priority);

  /// Leaf whose cumulative range [prefix(i), prefix(i) + p_i) contains mass.
  /// mass is clamped into [0, total()); zero-priority leaves are never hit.
  std::size_t find(double mass) const;

  /// Largest priority ever written (starts at 1, the priority of new inserts).
  double max_priority() const { return max_priority_; }

  /// Internal node values, heap-ordered from index 1 (for invariant checks).
  const std::vector<double>& nodes() const { return nodes_; }
  std::size_t leaf_base() const { return base_; }

 private:
  std::size_t capacity_;
  std::size_t base_;
  std::vector<double> nodes_;
  double max_priority_ = 1.0;
};

}  // namespace nmer
