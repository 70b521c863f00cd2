#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nmer/envs.hpp"
#include "nmer/replay.hpp"

namespace nmer {

/// Distance of interpolated transitions from the true transition manifold.
/// For an item [s | a | r | s2], residual = sqrt(||s2 - s2*(s, a)||^2 +
/// (r - r*(s, a))^2) with (r*, s2*) the environment's noise-free dynamics.
struct ResidualReport {
  std::string strategy;
  std::uint64_t seed = 0;
  std::vector<std::size_t> sample_ids;
  std::vector<double> residuals;
  std::vector<double> reward_residuals;  // |r - r*|
  std::vector<double> state_residuals;   // ||s2 - s2*||
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  double max = 0.0;

  std::size_t count() const { return residuals.size(); }
  /// Appends another report's items and refreshes the summary statistics.
  void merge(const ResidualReport& other);
  void summarize();
};

/// Reports every interpolated item of the batch; passthrough items are
/// skipped. Throws InvalidConfig for stochastic environments.
/// Item i of the batch is reported as sample_id first_sample_id + i.
ResidualReport residual(const TrainingBatch& batch, const Env& env, std::string strategy = {},
                        std::uint64_t seed = 0, std::size_t first_sample_id = 0);

/// Residual of one flat vector.
struct ItemResidual {
  double total, reward, state;
};
ItemResidual item_residual(std::span<const double> flat, const Env& env);

/// CSV columns: strategy,seed,sample_id,residual,reward_residual,state_residual
void write_residual_csv(std::ostream& out, const ResidualReport& report, bool header = true);

}  // namespace nmer
