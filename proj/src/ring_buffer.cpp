#include "nmer/ring_buffer.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "nmer/error.hpp"

namespace nmer {

RingBuffer::RingBuffer(SpaceSpec spec, std::size_t capacity)
    : spec_(std::move(spec)), capacity_(capacity), flat_dim_(spec_.flat_dim()) {
  spec_.validate();
  if (capacity_ == 0) throw InvalidParameter("buffer capacity must be positive");
}

std::size_t RingBuffer::insert(const Transition& t) {
  validate_transition(t, spec_);
  const std::size_t slot = head_;
  if (count_ < capacity_) {
    flats_.resize(flats_.size() + flat_dim_);
    done_.push_back(0);
    episode_.push_back(0);
    step_.push_back(0);
    counter_.push_back(0);
    ++count_;
  } else {
    auto it = by_key_.find({episode_[slot], step_[slot]});
    if (it != by_key_.end() && it->second == slot) by_key_.erase(it);
  }
  encode_into(t, spec_, std::span<double>(flats_).subspan(slot * flat_dim_, flat_dim_));
  done_[slot] = t.done ? 1 : 0;
  episode_[slot] = t.episode_id;
  step_[slot] = t.step_idx;
  counter_[slot] = next_counter_++;
  by_key_[{t.episode_id, t.step_idx}] = slot;
  head_ = (head_ + 1) % capacity_;
  return slot;
}

std::vector<std::size_t> RingBuffer::sample_uniform(std::size_t n, Rng& rng) const {
  if (count_ == 0) throw EmptyBuffer();
  std::uniform_int_distribution<std::size_t> pick(0, count_ - 1);
  std::vector<std::size_t> out(n);
  for (auto& s : out) s = pick(rng);
  return out;
}

std::optional<std::size_t> RingBuffer::successor(std::size_t slot) const {
  check_slot(slot);
  auto it = by_key_.find({episode_[slot], step_[slot] + 1});
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

void RingBuffer::check_slot(std::size_t slot) const {
  if (slot >= count_) {
    throw InvalidInput("slot " + std::to_string(slot) + " is not occupied");
  }
}

std::span<const double> RingBuffer::flat(std::size_t slot) const {
  check_slot(slot);
  return std::span<const double>(flats_).subspan(slot * flat_dim_, flat_dim_);
}

std::span<const double> RingBuffer::features(std::size_t slot) const {
  return flat(slot).first(spec_.feature_dim());
}

bool RingBuffer::done(std::size_t slot) const {
  check_slot(slot);
  return done_[slot] != 0;
}

std::uint64_t RingBuffer::episode_id(std::size_t slot) const {
  check_slot(slot);
  return episode_[slot];
}

std::uint64_t RingBuffer::step_idx(std::size_t slot) const {
  check_slot(slot);
  return step_[slot];
}

std::uint64_t RingBuffer::insert_counter(std::size_t slot) const {
  check_slot(slot);
  return counter_[slot];
}

Transition RingBuffer::get(std::size_t slot) const {
  return decode(flat(slot), done_[slot] != 0, episode_[slot], step_[slot], spec_);
}

std::vector<std::size_t> RingBuffer::slots_by_age() const {
  std::vector<std::size_t> out;
  out.reserve(count_);
  const std::size_t start = full() ? head_ : 0;
  for (std::size_t i = 0; i < count_; ++i) out.push_back((start + i) % capacity_);
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void RingBuffer::dump(std::ostream& out) const {
  out << "nmer-buffer state_dim=" << spec_.state_dim << " action_dim=" << spec_.action_dim
      << " action_low=";
  for (std::size_t i = 0; i < spec_.action_dim; ++i) {
    out << (i ? "," : "") << format_double(spec_.action_low[i]);
  }
  out << " action_high=";
  for (std::size_t i = 0; i < spec_.action_dim; ++i) {
    out << (i ? "," : "") << format_double(spec_.action_high[i]);
  }
  out << '\n';
  for (std::size_t slot : slots_by_age()) {
    for (double v : flat(slot)) out << format_double(v) << ' ';
    out << (done_[slot] ? 1 : 0) << ' ' << episode_[slot] << ' ' << step_[slot] << '\n';
  }
}

void RingBuffer::dump(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot open " + path + " for writing");
  dump(f);
}

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

}  // namespace

RingBuffer RingBuffer::restore(std::istream& in, std::size_t capacity) {
  std::string header;
  if (!std::getline(in, header)) throw InvalidInput("buffer dump is missing its header");
  std::istringstream hs(header);
  std::string magic;
  hs >> magic;
  if (magic != "nmer-buffer") throw InvalidInput("not a buffer dump: " + header);
  SpaceSpec spec;
  bool have_low = false, have_high = false;
  std::string field;
  while (hs >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw InvalidInput("malformed header field " + field);
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "state_dim") {
      spec.state_dim = std::stoul(value);
    } else if (key == "action_dim") {
      spec.action_dim = std::stoul(value);
    } else if (key == "action_low") {
      spec.action_low = parse_list(value);
      have_low = true;
    } else if (key == "action_high") {
      spec.action_high = parse_list(value);
      have_high = true;
    } else {
      throw InvalidInput("unknown header field " + key);
    }
  }
  if (!have_low) spec.action_low.assign(spec.action_dim, -1.0);
  if (!have_high) spec.action_high.assign(spec.action_dim, 1.0);
  spec.validate();

  std::vector<Transition> rows;
  std::vector<double> values(spec.flat_dim());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    for (double& v : values) {
      std::string tok;
      if (!(ls >> tok)) throw InvalidInput("short record in buffer dump");
      v = std::stod(tok);
    }
    int done = 0;
    std::uint64_t episode = 0, step = 0;
    if (!(ls >> done >> episode >> step)) throw InvalidInput("short record in buffer dump");
    rows.push_back(decode(values, done != 0, episode, step, spec));
  }
  if (capacity == 0) capacity = std::max<std::size_t>(rows.size(), 1);
  RingBuffer buf(spec, capacity);
  for (const auto& t : rows) buf.insert(t);
  return buf;
}

RingBuffer RingBuffer::restore(const std::string& path, std::size_t capacity) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("cannot open " + path);
  return restore(f, capacity);
}

}  // namespace nmer
