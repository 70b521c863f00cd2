#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nmer {

class RingBuffer;

/// Which slice of a stored transition a RunningMoments instance tracks.
enum class MomentsScope {
  kFeatures,  // [s | a]
  kFlat,      // [s | a | r | s2]
};

/// Per-dimension running mean and population variance (Welford), used to
/// Z-score the neighbor-search features.
class RunningMoments {
 public:
  static constexpr double kDefaultStdFloor = 1e-8;

  explicit RunningMoments(std::size_t dim, double std_floor = kDefaultStdFloor);

  std::size_t dim() const { return mean_.size(); }
  std::uint64_t count() const { return count_; }
  double std_floor() const { return std_floor_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& m2() const { return m2_; }

  void update(std::span<const double> x);

  /// Population variance m2 / count.
  double variance(std::size_t j) const;
  /// max(sqrt(variance), std_floor).
  double stddev(std::size_t j) const;

  /// z_j = (x_j - mean_j) / stddev(j). Every caller that needs Z-scores
  /// goes through standardize_component so distances agree bit-for-bit.
  std::vector<double> standardize(std::span<const double> x) const;
  double standardize_component(std::size_t j, double x) const {
    return (x - mean_[j]) / std_[j];
  }

  /// Replaces the statistics with exact two-pass moments of the buffer's
  /// current contents.
  void recompute_full(const RingBuffer& buf, MomentsScope scope = MomentsScope::kFeatures);

 private:
  void refresh_std();

  double std_floor_;
  std::uint64_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
  std::vector<double> std_;
};

}  // namespace nmer
