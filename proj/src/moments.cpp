#include "nmer/moments.hpp"

#include <algorithm>
#include <cmath>

#include "nmer/error.hpp"
#include "nmer/ring_buffer.hpp"

namespace nmer {

RunningMoments::RunningMoments(std::size_t dim, double std_floor)
    : std_floor_(std_floor), mean_(dim, 0.0), m2_(dim, 0.0), std_(dim, std_floor) {
  if (dim == 0) throw InvalidParameter("moments dimension must be positive");
  if (!(std_floor > 0.0)) throw InvalidParameter("std_floor must be positive");
}

void RunningMoments::update(std::span<const double> x) {
  if (x.size() != dim()) throw InvalidInput("moments update has wrong dimension");
  if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); })) {
    throw InvalidInput("moments update with non-finite value");
  }
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t j = 0; j < dim(); ++j) {
    const double delta = x[j] - mean_[j];
    mean_[j] += delta / n;
    m2_[j] += delta * (x[j] - mean_[j]);
    if (m2_[j] < 0.0) m2_[j] = 0.0;
  }
  refresh_std();
}

double RunningMoments::variance(std::size_t j) const {
  if (count_ == 0) throw UninitializedMoments();
  return m2_[j] / static_cast<double>(count_);
}

double RunningMoments::stddev(std::size_t j) const {
  if (count_ == 0) throw UninitializedMoments();
  return std_[j];
}

std::vector<double> RunningMoments::standardize(std::span<const double> x) const {
  if (count_ == 0) throw UninitializedMoments();
  if (x.size() != dim()) throw InvalidInput("standardize input has wrong dimension");
  std::vector<double> z(dim());
  for (std::size_t j = 0; j < dim(); ++j) z[j] = standardize_component(j, x[j]);
  return z;
}

void RunningMoments::recompute_full(const RingBuffer& buf, MomentsScope scope) {
  if (buf.empty()) throw EmptyBuffer();
  const std::size_t width =
      scope == MomentsScope::kFeatures ? buf.spec().feature_dim() : buf.spec().flat_dim();
  if (width != dim()) throw InvalidInput("moments dimension does not match buffer scope");
  const std::size_t n = buf.size();
  std::vector<double> sum(dim(), 0.0);
  for (std::size_t slot = 0; slot < n; ++slot) {
    auto x = buf.flat(slot).first(width);
    for (std::size_t j = 0; j < width; ++j) sum[j] += x[j];
  }
  for (std::size_t j = 0; j < width; ++j) mean_[j] = sum[j] / static_cast<double>(n);
  std::fill(m2_.begin(), m2_.end(), 0.0);
  for (std::size_t slot = 0; slot < n; ++slot) {
    auto x = buf.flat(slot).first(width);
    for (std::size_t j = 0; j < width; ++j) {
      const double d = x[j] - mean_[j];
      m2_[j] += d * d;
    }
  }
  count_ = n;
  refresh_std();
}

void RunningMoments::refresh_std() {
  for (std::size_t j = 0; j < dim(); ++j) {
    std_[j] = std::max(std::sqrt(m2_[j] / static_cast<double>(count_)), std_floor_);
  }
}

}  // namespace nmer
