#include "nmer/sum_tree.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nmer/error.hpp"

namespace nmer {

SumTree::SumTree(std::size_t capacity) : capacity_(capacity), base_(1) {
  if (capacity == 0) throw InvalidParameter("sum tree capacity must be positive");
  while (base_ < capacity) base_ <<= 1;
  nodes_.assign(2 * base_, 0.0);
}

double SumTree::get(std::size_t leaf) const {
  if (leaf >= capacity_) throw InvalidInput("sum tree leaf " + std::to_string(leaf) + " out of range");
  return nodes_[base_ + leaf];
}

void SumTree::set(std::size_t leaf, double priority) {
  if (leaf >= capacity_) throw InvalidInput("sum tree leaf " + std::to_string(leaf) + " out of range");
  if (!(priority >= 0.0) || !std::isfinite(priority)) {
    throw InvalidInput("priority must be finite and non-negative");
  }
  std::size_t i = base_ + leaf;
  nodes_[i] = priority;
  max_priority_ = std::max(max_priority_, priority);
  for (i >>= 1; i >= 1; i >>= 1) nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
}

std::size_t SumTree::find(double mass) const {
  if (!(total() > 0.0)) throw EmptyBuffer("sum tree holds no priority mass");
  mass = std::clamp(mass, 0.0, total());
  std::size_t i = 1;
  while (i < base_) {
    const double left = nodes_[2 * i];
    if (mass < left || nodes_[2 * i + 1] <= 0.0) {
      i = 2 * i;
    } else {
      mass -= left;
      i = 2 * i + 1;
    }
  }
  // Rounding can walk into a zero leaf at the far right; step back to the
  // nearest positive one.
  std::size_t leaf = i - base_;
  while (leaf > 0 && nodes_[base_ + leaf] <= 0.0) --leaf;
  return leaf;
}

}  // namespace nmer
