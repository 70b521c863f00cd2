#include "nmer/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "nmer/error.hpp"

namespace nmer {

namespace {

// Nearest-rank percentile of sorted data.
double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

}  // namespace

void ResidualReport::summarize() {
  if (residuals.empty()) {
    mean = median = p95 = max = 0.0;
    return;
  }
  std::vector<double> sorted = residuals;
  std::sort(sorted.begin(), sorted.end());
  mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  const std::size_t n = sorted.size();
  median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  p95 = percentile(sorted, 0.95);
  max = sorted.back();
}

void ResidualReport::merge(const ResidualReport& other) {
  sample_ids.insert(sample_ids.end(), other.sample_ids.begin(), other.sample_ids.end());
  residuals.insert(residuals.end(), other.residuals.begin(), other.residuals.end());
  reward_residuals.insert(reward_residuals.end(), other.reward_residuals.begin(),
                          other.reward_residuals.end());
  state_residuals.insert(state_residuals.end(), other.state_residuals.begin(),
                         other.state_residuals.end());
  summarize();
}

ItemResidual item_residual(std::span<const double> flat, const Env& env) {
  const SpaceSpec& spec = env.spec();
  if (flat.size() != spec.flat_dim()) throw InvalidInput("flat vector does not match environment");
  const auto s = flat.first(spec.state_dim);
  const auto a = flat.subspan(spec.action_offset(), spec.action_dim);
  const double r = flat[spec.reward_offset()];
  const auto s2 = flat.subspan(spec.next_state_offset(), spec.state_dim);
  const ModelOutput truth = env.model(s, a);
  double state_sq = 0.0;
  for (std::size_t j = 0; j < spec.state_dim; ++j) {
    const double d = s2[j] - truth.s2[j];
    state_sq += d * d;
  }
  const double dr = r - truth.r;
  return {std::sqrt(state_sq + dr * dr), std::abs(dr), std::sqrt(state_sq)};
}

ResidualReport residual(const TrainingBatch& batch, const Env& env, std::string strategy,
                        std::uint64_t seed, std::size_t first_sample_id) {
  if (!env.deterministic()) {
    throw InvalidConfig("residuals need deterministic dynamics; disable environment noise");
  }
  ResidualReport report;
  report.strategy = std::move(strategy);
  report.seed = seed;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch.interpolated[i]) continue;
    const ItemResidual r = item_residual(batch.flat(i), env);
    report.sample_ids.push_back(first_sample_id + i);
    report.residuals.push_back(r.total);
    report.reward_residuals.push_back(r.reward);
    report.state_residuals.push_back(r.state);
  }
  report.summarize();
  return report;
}

void write_residual_csv(std::ostream& out, const ResidualReport& report, bool header) {
  if (header) out << "strategy,seed,sample_id,residual,reward_residual,state_residual\n";
  char buf[128];
  for (std::size_t i = 0; i < report.count(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", report.residuals[i],
                  report.reward_residuals[i], report.state_residuals[i]);
    out << report.strategy << ',' << report.seed << ',' << report.sample_ids[i] << ',' << buf
        << '\n';
  }
}

}  // namespace nmer
