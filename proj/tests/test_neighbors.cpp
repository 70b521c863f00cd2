#include <random>

#include <doctest.h>

#include "nmer/error.hpp"
#include "nmer/neighbor_index.hpp"
#include "nmer/replay.hpp"
#include "support.hpp"

using namespace nmer;
using nmer::testing::brute_force_knn;
using nmer::testing::random_grid_transition;

namespace {

StrategyConfig nmer_config(NeighborIndex::Backend backend) {
  StrategyConfig c;
  c.kind = StrategyKind::kNmer;
  c.index_backend = backend;
  return c;
}

}  // namespace

TEST_CASE("scan and tree agree with the all-pairs oracle, ties included") {
  for (int trial = 0; trial < 6; ++trial) {
    const bool coarse = trial % 2 == 0;
    const auto spec = make_space(1 + trial % 3, 1 + trial % 2);
    // Capacity below the insert count exercises eviction and stale entries.
    ReplayMemory tree(spec, 300, nmer_config(NeighborIndex::Backend::kTree));
    ReplayMemory scan(spec, 300, nmer_config(NeighborIndex::Backend::kScan));
    Rng rng(100 + trial);
    for (std::uint64_t i = 0; i < 700; ++i) {
      const auto t = random_grid_transition(spec, rng, coarse, i);
      tree.insert(t);
      scan.insert(t);
    }
    const auto& buf = tree.buffer();
    const auto& m = tree.moments();
    for (std::size_t q = 0; q < buf.size(); q += 7) {
      for (std::size_t k : {std::size_t{1}, std::size_t{5}, std::size_t{10}, buf.size() - 1}) {
        const auto expect = brute_force_knn(buf, m, q, k);
        CHECK(knn_scan(buf, m, {q, k, true}) == expect);
        CHECK(tree.index().knn(buf, m, {q, k, true}) == expect);
        CHECK(scan.index().knn(buf, m, {q, k, true}) == expect);
      }
    }
  }
}

TEST_CASE("including self puts the query first") {
  const auto spec = make_space(2, 1);
  ReplayMemory mem(spec, 100, nmer_config(NeighborIndex::Backend::kTree));
  Rng rng(7);
  for (std::uint64_t i = 0; i < 100; ++i) mem.insert(random_grid_transition(spec, rng, false, i));
  const auto hood = mem.index().knn(mem.buffer(), mem.moments(), {42, 3, false});
  CHECK(hood.front() == 42);
  CHECK(hood == brute_force_knn(mem.buffer(), mem.moments(), 42, 3, false));
}

TEST_CASE("distance is symmetric and zero on the diagonal") {
  const auto spec = make_space(3, 1);
  ReplayMemory mem(spec, 50, nmer_config(NeighborIndex::Backend::kScan));
  Rng rng(8);
  for (std::uint64_t i = 0; i < 50; ++i) mem.insert(random_grid_transition(spec, rng, false, i));
  for (std::size_t a = 0; a < 50; a += 5) {
    CHECK(standardized_distance2(mem.buffer(), mem.moments(), a, a) == 0.0);
    for (std::size_t b = 0; b < 50; b += 3) {
      CHECK(standardized_distance2(mem.buffer(), mem.moments(), a, b) ==
            standardized_distance2(mem.buffer(), mem.moments(), b, a));
    }
  }
}

TEST_CASE("knn argument errors") {
  const auto spec = make_space(1, 1);
  ReplayMemory mem(spec, 10, nmer_config(NeighborIndex::Backend::kTree));
  Rng rng(9);
  for (std::uint64_t i = 0; i < 5; ++i) mem.insert(random_grid_transition(spec, rng, false, i));
  const auto& buf = mem.buffer();
  CHECK_THROWS_AS(mem.index().knn(buf, mem.moments(), {0, 0, true}), InvalidParameter);
  CHECK_THROWS_AS(mem.index().knn(buf, mem.moments(), {0, 5, true}), InsufficientPopulation);
  CHECK_NOTHROW(mem.index().knn(buf, mem.moments(), {0, 5, false}));
  RunningMoments empty(spec.feature_dim());
  CHECK_THROWS_AS(knn_scan(buf, empty, {0, 1, true}), UninitializedMoments);
  NeighborIndex stale;
  CHECK_THROWS_AS(stale.knn(buf, mem.moments(), {0, 1, true}), InvalidInput);
}
