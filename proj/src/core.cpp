#include "nmer/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nmer/error.hpp"

namespace nmer {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_length(const char* field, std::size_t got, std::size_t want) {
  if (got != want) {
    throw InvalidInput(std::string(field) + " has length " + std::to_string(got) +
                       ", expected " + std::to_string(want));
  }
}

}  // namespace

void SpaceSpec::validate() const {
  if (state_dim < 1) throw InvalidInput("state_dim must be >= 1");
  if (action_dim < 1) throw InvalidInput("action_dim must be >= 1");
  check_length("action_low", action_low.size(), action_dim);
  check_length("action_high", action_high.size(), action_dim);
  for (std::size_t i = 0; i < action_dim; ++i) {
    if (!(action_low[i] < action_high[i])) {
      throw InvalidInput("action_low must be < action_high in every dimension");
    }
  }
}

SpaceSpec make_space(std::size_t state_dim, std::size_t action_dim, double bound) {
  SpaceSpec spec{state_dim, action_dim, std::vector<double>(action_dim, -bound),
                 std::vector<double>(action_dim, bound)};
  spec.validate();
  return spec;
}

void validate_transition(const Transition& t, const SpaceSpec& spec) {
  check_length("s", t.s.size(), spec.state_dim);
  check_length("a", t.a.size(), spec.action_dim);
  check_length("s2", t.s2.size(), spec.state_dim);
  if (!all_finite(t.s) || !all_finite(t.a) || !all_finite(t.s2) || !std::isfinite(t.r)) {
    throw InvalidInput("transition contains non-finite values");
  }
}

void encode_into(const Transition& t, const SpaceSpec& spec, std::span<double> out) {
  validate_transition(t, spec);
  check_length("flat output", out.size(), spec.flat_dim());
  auto it = std::copy(t.s.begin(), t.s.end(), out.begin());
  it = std::copy(t.a.begin(), t.a.end(), it);
  *it++ = t.r;
  std::copy(t.s2.begin(), t.s2.end(), it);
}

FlatVector encode(const Transition& t, const SpaceSpec& spec) {
  FlatVector x(std::vector<double>(spec.flat_dim()));
  encode_into(t, spec, x.values);
  return x;
}

Transition decode(std::span<const double> x, bool done, std::uint64_t episode_id,
                  std::uint64_t step_idx, const SpaceSpec& spec) {
  check_length("flat vector", x.size(), spec.flat_dim());
  const auto ds = static_cast<std::ptrdiff_t>(spec.state_dim);
  const auto da = static_cast<std::ptrdiff_t>(spec.action_dim);
  Transition t;
  t.s.assign(x.begin(), x.begin() + ds);
  t.a.assign(x.begin() + ds, x.begin() + ds + da);
  t.r = x[spec.reward_offset()];
  t.s2.assign(x.begin() + ds + da + 1, x.end());
  t.done = done;
  t.episode_id = episode_id;
  t.step_idx = step_idx;
  return t;
}

}  // namespace nmer
