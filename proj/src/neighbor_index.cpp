#include "nmer/neighbor_index.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "nmer/error.hpp"
#include "nmer/moments.hpp"
#include "nmer/ring_buffer.hpp"

namespace nmer {

namespace {

struct Scored {
  double d2;
  std::uint64_t counter;
  std::size_t slot;
};

bool closer(const Scored& a, const Scored& b) {
  if (a.d2 != b.d2) return a.d2 < b.d2;
  return a.counter < b.counter;
}

double distance_to(const RunningMoments& m, std::span<const double> x,
                   const std::vector<double>& q_z) {
  double s = 0.0;
  for (std::size_t j = 0; j < q_z.size(); ++j) {
    const double d = m.standardize_component(j, x[j]) - q_z[j];
    s += d * d;
  }
  return s;
}

void check_population(const RingBuffer& buf, const RunningMoments& moments,
                      const NeighborQuery& q) {
  if (buf.empty()) throw EmptyBuffer();
  if (moments.count() == 0) throw UninitializedMoments();
  if (moments.dim() != buf.spec().feature_dim()) {
    throw InvalidInput("moments dimension does not match buffer features");
  }
  if (q.k == 0) throw InvalidParameter("k must be >= 1");
  const std::size_t available = buf.size() - (q.exclude_self ? 1 : 0);
  if (q.query_slot >= buf.size()) throw InvalidInput("query slot is not occupied");
  if (q.k > available) {
    throw InsufficientPopulation("requested k=" + std::to_string(q.k) + " neighbors but only " +
                                 std::to_string(available) + " candidates are stored");
  }
}

}  // namespace

double standardized_distance2(const RingBuffer& buf, const RunningMoments& moments,
                              std::size_t a, std::size_t b) {
  const auto za = moments.standardize(buf.features(a));
  return distance_to(moments, buf.features(b), za);
}

std::vector<std::size_t> knn_scan(const RingBuffer& buf, const RunningMoments& moments,
                                  const NeighborQuery& q) {
  check_population(buf, moments, q);
  const auto q_z = moments.standardize(buf.features(q.query_slot));
  std::vector<Scored> all;
  all.reserve(buf.size());
  for (std::size_t slot = 0; slot < buf.size(); ++slot) {
    if (q.exclude_self && slot == q.query_slot) continue;
    all.push_back({distance_to(moments, buf.features(slot), q_z), buf.insert_counter(slot), slot});
  }
  const auto kth = all.begin() + static_cast<std::ptrdiff_t>(q.k);
  std::partial_sort(all.begin(), kth, all.end(), closer);
  std::vector<std::size_t> out;
  out.reserve(q.k);
  for (auto it = all.begin(); it != kth; ++it) out.push_back(it->slot);
  return out;
}

// Bounded max-heap of the best k candidates seen so far.
class NeighborIndex::Candidates {
 public:
  explicit Candidates(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

  bool full() const { return heap_.size() == k_; }
  const Scored& worst() const { return heap_.front(); }

  void offer(const Scored& s) {
    if (!full()) {
      heap_.push_back(s);
      std::push_heap(heap_.begin(), heap_.end(), closer);
    } else if (closer(s, worst())) {
      std::pop_heap(heap_.begin(), heap_.end(), closer);
      heap_.back() = s;
      std::push_heap(heap_.begin(), heap_.end(), closer);
    }
  }

  // A box whose lower bound equals the current worst distance may still
  // hold a tie with a smaller insert counter, so only strict excess prunes.
  bool prunes(double bound) const { return full() && bound > worst().d2; }

  std::vector<std::size_t> sorted_slots() {
    std::sort_heap(heap_.begin(), heap_.end(), closer);
    std::vector<std::size_t> out;
    out.reserve(heap_.size());
    for (const auto& s : heap_) out.push_back(s.slot);
    return out;
  }

 private:
  std::size_t k_;
  std::vector<Scored> heap_;
};

NeighborIndex::NeighborIndex(Backend backend, std::size_t leaf_size,
                             std::size_t rebuild_threshold)
    : backend_(backend),
      leaf_size_(std::max<std::size_t>(leaf_size, 1)),
      rebuild_threshold_(rebuild_threshold) {}

void NeighborIndex::on_insert(const RingBuffer& buf, const RunningMoments& moments,
                              std::size_t slot) {
  if (backend_ == Backend::kScan) return;
  pending_.push_back({slot, buf.insert_counter(slot)});
  synced_inserts_ = buf.total_inserts();
  if (pending_.size() > rebuild_threshold_) rebuild(buf, moments);
}

void NeighborIndex::rebuild(const RingBuffer& buf, const RunningMoments& moments) {
  pending_.clear();
  entries_.clear();
  nodes_.clear();
  box_lo_.clear();
  box_hi_.clear();
  dim_ = buf.spec().feature_dim();
  synced_inserts_ = buf.total_inserts();
  if (backend_ == Backend::kScan || buf.empty()) return;
  entries_.reserve(buf.size());
  for (std::size_t slot = 0; slot < buf.size(); ++slot) {
    entries_.push_back({slot, buf.insert_counter(slot)});
  }
  nodes_.reserve(2 * buf.size() / leaf_size_ + 2);
  build(buf, moments, 0, entries_.size());
}

std::size_t NeighborIndex::build(const RingBuffer& buf, const RunningMoments& moments,
                                 std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({begin, end, 0, 0});
  box_lo_.resize((id + 1) * dim_, std::numeric_limits<double>::infinity());
  box_hi_.resize((id + 1) * dim_, -std::numeric_limits<double>::infinity());
  double* lo = &box_lo_[id * dim_];
  double* hi = &box_hi_[id * dim_];
  for (std::size_t i = begin; i < end; ++i) {
    auto x = buf.features(entries_[i].slot);
    for (std::size_t j = 0; j < dim_; ++j) {
      lo[j] = std::min(lo[j], x[j]);
      hi[j] = std::max(hi[j], x[j]);
    }
  }
  if (end - begin <= leaf_size_) return id;

  // Split along the widest dimension in Z-score units; only affects speed.
  std::size_t split = 0;
  double widest = -1.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    const double w = (hi[j] - lo[j]) / moments.stddev(j);
    if (w > widest) {
      widest = w;
      split = j;
    }
  }
  if (!(widest > 0.0)) return id;  // all points identical

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(entries_.begin() + static_cast<std::ptrdiff_t>(begin),
                   entries_.begin() + static_cast<std::ptrdiff_t>(mid),
                   entries_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](const Entry& a, const Entry& b) {
                     return buf.features(a.slot)[split] < buf.features(b.slot)[split];
                   });
  const std::size_t left = build(buf, moments, begin, mid);
  const std::size_t right = build(buf, moments, mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void NeighborIndex::search(const RingBuffer& buf, const RunningMoments& moments,
                           std::size_t node, const std::vector<double>& q_raw,
                           const std::vector<double>& q_z, const NeighborQuery& q,
                           Candidates& best) const {
  const Node& n = nodes_[node];
  if (n.left == 0) {
    for (std::size_t i = n.begin; i < n.end; ++i) {
      const Entry& e = entries_[i];
      if (buf.insert_counter(e.slot) != e.counter) continue;  // overwritten since build
      if (q.exclude_self && e.slot == q.query_slot) continue;
      best.offer({distance_to(moments, buf.features(e.slot), q_z), e.counter, e.slot});
    }
    return;
  }
  auto bound = [&](std::size_t child) {
    const double* lo = &box_lo_[child * dim_];
    const double* hi = &box_hi_[child * dim_];
    double s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      double d = 0.0;
      if (q_raw[j] < lo[j]) {
        d = moments.standardize_component(j, lo[j]) - q_z[j];
      } else if (q_raw[j] > hi[j]) {
        d = moments.standardize_component(j, hi[j]) - q_z[j];
      }
      s += d * d;
    }
    return s;
  };
  std::size_t first = n.left, second = n.right;
  double b_first = bound(first), b_second = bound(second);
  if (b_second < b_first) {
    std::swap(first, second);
    std::swap(b_first, b_second);
  }
  if (!best.prunes(b_first)) search(buf, moments, first, q_raw, q_z, q, best);
  if (!best.prunes(b_second)) search(buf, moments, second, q_raw, q_z, q, best);
}

std::vector<std::size_t> NeighborIndex::knn(const RingBuffer& buf, const RunningMoments& moments,
                                            const NeighborQuery& q) const {
  if (backend_ == Backend::kScan) return knn_scan(buf, moments, q);
  check_population(buf, moments, q);
  if (synced_inserts_ != buf.total_inserts()) {
    throw InvalidInput("neighbor index has not seen every buffer insert");
  }
  const auto feat = buf.features(q.query_slot);
  const std::vector<double> q_raw(feat.begin(), feat.end());
  const auto q_z = moments.standardize(q_raw);
  Candidates best(q.k);
  for (const Entry& e : pending_) {
    if (buf.insert_counter(e.slot) != e.counter) continue;
    if (q.exclude_self && e.slot == q.query_slot) continue;
    best.offer({distance_to(moments, buf.features(e.slot), q_z), e.counter, e.slot});
  }
  if (!nodes_.empty()) search(buf, moments, 0, q_raw, q_z, q, best);
  return best.sorted_slots();
}

}  // namespace nmer
