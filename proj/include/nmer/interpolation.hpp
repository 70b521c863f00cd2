#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>

#include "nmer/core.hpp"
#include "nmer/rng.hpp"

namespace nmer {

class RingBuffer;
class RunningMoments;
class NeighborIndex;

struct MixupParams {
  double alpha = 1.0;  // symmetric Beta(alpha, alpha) shape
  /// Pins lambda instead of sampling it (ablations and tests).
  std::optional<double> fixed_lambda;

  void validate() const;
};

/// lambda ~ Beta(alpha, alpha), via the ratio of two Gamma(alpha) draws.
double sample_lambda(const MixupParams& p, Rng& rng);

/// Draws lambda, or returns p.fixed_lambda when set (no generator use).
double draw_lambda(const MixupParams& p, Rng& rng);

/// Elementwise lambda * x1 + (1 - lambda) * x2.
///
/// The weight pair is formed so that w1 + w2 == 1 exactly, and each
/// component is clamped to [min(x1_j, x2_j), max(x1_j, x2_j)]. Together
/// this makes mixup(x1, x2, l) == mixup(x2, x1, 1 - l) bitwise and keeps
/// every output inside the segment's bounding box despite rounding.
FlatVector mixup(const FlatVector& x1, const FlatVector& x2, double lambda);
void mixup_into(std::span<const double> x1, std::span<const double> x2, double lambda,
                std::span<double> out);

struct InterpolationOutcome {
  FlatVector flat;
  double lambda_used = 1.0;
  bool was_interpolated = false;
  std::pair<std::size_t, std::size_t> source_slots{0, 0};
};

struct LocalMixupOptions {
  std::size_t k = 10;
  bool exclude_self = true;
  MixupParams mixup;
};

/// Mixes the transition in sample_slot with one of its k nearest
/// Z-scored state-action neighbors, chosen uniformly. A terminal sample or
/// a terminal neighbor yields the raw sample (was_interpolated = false).
InterpolationOutcome local_mixup(const RingBuffer& buf, const RunningMoments& moments,
                                 const NeighborIndex& index, std::size_t sample_slot,
                                 const LocalMixupOptions& opts, Rng& rng);

}  // namespace nmer
