#include "nmer/interpolation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nmer/error.hpp"
#include "nmer/moments.hpp"
#include "nmer/neighbor_index.hpp"
#include "nmer/ring_buffer.hpp"

namespace nmer {

void MixupParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidParameter("mixup alpha must be > 0");
  }
  if (fixed_lambda && !(*fixed_lambda >= 0.0 && *fixed_lambda <= 1.0)) {
    throw InvalidParameter("fixed lambda must lie in [0, 1]");
  }
}

double sample_lambda(const MixupParams& p, Rng& rng) {
  if (!(p.alpha > 0.0)) throw InvalidParameter("mixup alpha must be > 0");
  std::gamma_distribution<double> gamma(p.alpha, 1.0);
  for (;;) {
    const double x = gamma(rng);
    const double y = gamma(rng);
    const double sum = x + y;
    // Both draws can underflow to zero for very small alpha.
    if (sum > 0.0) return x / sum;
  }
}

double draw_lambda(const MixupParams& p, Rng& rng) {
  if (p.fixed_lambda) return *p.fixed_lambda;
  return sample_lambda(p, rng);
}

namespace {

// Weights with w1 + w2 == 1 exactly. For lambda >= 0.5, 1 - lambda is exact
// (Sterbenz); otherwise the larger weight is rounded and the smaller one is
// recovered exactly from it. Swapping the roles of x1/x2 with 1 - lambda
// yields the same pair.
std::pair<double, double> convex_weights(double lambda) {
  if (lambda >= 0.5) return {lambda, 1.0 - lambda};
  const double w2 = 1.0 - lambda;
  return {1.0 - w2, w2};
}

}  // namespace

void mixup_into(std::span<const double> x1, std::span<const double> x2, double lambda,
                std::span<double> out) {
  if (x1.size() != x2.size() || out.size() != x1.size()) {
    throw InvalidInput("mixup operands have different lengths");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidParameter("lambda must lie in [0, 1]");
  const auto [w1, w2] = convex_weights(lambda);
  for (std::size_t j = 0; j < x1.size(); ++j) {
    const double lo = std::min(x1[j], x2[j]);
    const double hi = std::max(x1[j], x2[j]);
    out[j] = std::clamp(w1 * x1[j] + w2 * x2[j], lo, hi);
  }
}

FlatVector mixup(const FlatVector& x1, const FlatVector& x2, double lambda) {
  FlatVector out(std::vector<double>(x1.size()));
  mixup_into(x1.view(), x2.view(), lambda, out.values);
  return out;
}

namespace {

InterpolationOutcome passthrough(const RingBuffer& buf, std::size_t slot) {
  auto f = buf.flat(slot);
  return {FlatVector(std::vector<double>(f.begin(), f.end())), 1.0, false, {slot, slot}};
}

}  // namespace

InterpolationOutcome local_mixup(const RingBuffer& buf, const RunningMoments& moments,
                                 const NeighborIndex& index, std::size_t sample_slot,
                                 const LocalMixupOptions& opts, Rng& rng) {
  if (opts.k == 0) throw InvalidParameter("k must be >= 1");
  const std::size_t available = buf.size() - (opts.exclude_self ? 1 : 0);
  if (buf.empty() || opts.k > available) {
    throw InsufficientPopulation("local mixup needs k=" + std::to_string(opts.k) +
                                 " neighbors but the buffer holds " +
                                 std::to_string(buf.size()) + " transitions");
  }
  if (buf.done(sample_slot)) return passthrough(buf, sample_slot);

  std::size_t neighbor;
  if (opts.k == available) {
    // The neighborhood is every candidate slot; a uniform pick from it does
    // not depend on the distance order, so the sort is skipped.
    std::uniform_int_distribution<std::size_t> pick(0, available - 1);
    neighbor = pick(rng);
    if (opts.exclude_self && neighbor >= sample_slot) ++neighbor;
  } else {
    const auto hood = index.knn(buf, moments, {sample_slot, opts.k, opts.exclude_self});
    std::uniform_int_distribution<std::size_t> pick(0, hood.size() - 1);
    neighbor = hood[pick(rng)];
  }
  if (buf.done(neighbor)) return passthrough(buf, sample_slot);

  const double lambda = draw_lambda(opts.mixup, rng);
  InterpolationOutcome out;
  out.flat.values.resize(buf.spec().flat_dim());
  mixup_into(buf.flat(sample_slot), buf.flat(neighbor), lambda, out.flat.values);
  out.lambda_used = lambda;
  out.was_interpolated = true;
  out.source_slots = {sample_slot, neighbor};
  return out;
}

}  // namespace nmer
