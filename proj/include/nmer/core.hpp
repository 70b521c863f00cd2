#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nmer {

/// Dimensions and action bounds of an environment.
struct SpaceSpec {
  std::size_t state_dim = 1;
  std::size_t action_dim = 1;
  std::vector<double> action_low;
  std::vector<double> action_high;

  /// Throws InvalidInput when dims are zero or bounds are malformed.
  void validate() const;

  /// Length of the concatenated [s | a] neighbor-search features.
  std::size_t feature_dim() const { return state_dim + action_dim; }
  /// Length of the concatenated [s | a | r | s2] vector.
  std::size_t flat_dim() const { return 2 * state_dim + action_dim + 1; }

  std::size_t action_offset() const { return state_dim; }
  std::size_t reward_offset() const { return state_dim + action_dim; }
  std::size_t next_state_offset() const { return state_dim + action_dim + 1; }

  bool operator==(const SpaceSpec&) const = default;
};

/// Symmetric bounds [-bound, bound]^action_dim.
SpaceSpec make_space(std::size_t state_dim, std::size_t action_dim, double bound = 1.0);

struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> s2;
  bool done = false;
  std::uint64_t episode_id = 0;
  std::uint64_t step_idx = 0;

  bool operator==(const Transition&) const = default;
};

/// Checks vector lengths against the spec and finiteness of every entry.
void validate_transition(const Transition& t, const SpaceSpec& spec);

/// Numeric part of a transition laid out as [s | a | r | s2]. The terminal
/// flag never enters this vector, so interpolation cannot produce a
/// fractional termination signal.
struct FlatVector {
  std::vector<double> values;

  FlatVector() = default;
  explicit FlatVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  std::span<const double> view() const { return values; }

  bool operator==(const FlatVector&) const = default;
};

FlatVector encode(const Transition& t, const SpaceSpec& spec);

/// Writes the encoding of t into out (length spec.flat_dim()).
void encode_into(const Transition& t, const SpaceSpec& spec, std::span<double> out);

Transition decode(std::span<const double> x, bool done, std::uint64_t episode_id,
                  std::uint64_t step_idx, const SpaceSpec& spec);

inline Transition decode(const FlatVector& x, bool done, std::uint64_t episode_id,
                         std::uint64_t step_idx, const SpaceSpec& spec) {
  return decode(x.view(), done, episode_id, step_idx, spec);
}

}  // namespace nmer
