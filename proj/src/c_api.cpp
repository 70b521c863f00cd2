#include "nmer/c_api.h"

#include <algorithm>
#include <sstream>
#include <string>

#include "nmer/config.hpp"
#include "nmer/error.hpp"
#include "nmer/replay.hpp"

struct nmer_handle {
  nmer::ReplayMemory memory;
  std::string kind_name;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
int guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return 0;
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return -1;
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw nmer::InvalidInput(std::string(what) + " must not be null");
}

void check_len(const char* field, std::size_t got, std::size_t want) {
  if (got != want) {
    throw nmer::InvalidInput(std::string(field) + " has length " + std::to_string(got) +
                             ", expected length " + std::to_string(want));
  }
}

nmer::StrategyConfig parse_strategy(const char* text) {
  nmer::RunConfig cfg;
  if (text != nullptr) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (eq == std::string::npos) throw nmer::InvalidConfig("expected key = value: " + line);
      auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t\r"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
      };
      const std::string key = trim(line.substr(0, eq));
      if (key.rfind("strategy.", 0) != 0 && key.rfind("per.", 0) != 0) {
        throw nmer::InvalidConfig("only strategy.* and per.* keys are accepted, got '" + key + "'");
      }
      nmer::apply_setting(cfg, key, trim(line.substr(eq + 1)));
    }
  }
  cfg.strategy.validate();
  return cfg.strategy;
}

}  // namespace

extern "C" {

const char* nmer_ffi_version(void) { return NMER_FFI_VERSION; }

const char* nmer_ffi_last_error(void) { return g_last_error.c_str(); }

int nmer_ffi_create(size_t state_dim, size_t action_dim, const double* action_low,
                    const double* action_high, size_t capacity, const char* strategy_config,
                    nmer_handle** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    require(action_low, "action_low");
    require(action_high, "action_high");
    nmer::SpaceSpec spec{state_dim, action_dim,
                         std::vector<double>(action_low, action_low + action_dim),
                         std::vector<double>(action_high, action_high + action_dim)};
    nmer::StrategyConfig strategy = parse_strategy(strategy_config);
    auto* h = new nmer_handle{nmer::ReplayMemory(std::move(spec), capacity, strategy),
                              std::string(nmer::to_string(strategy.kind))};
    *out = h;
  });
}

void nmer_ffi_destroy(nmer_handle* handle) { delete handle; }

int nmer_ffi_layout(const nmer_handle* handle, size_t* state_dim, size_t* action_dim,
                    size_t* flat_dim) {
  return guarded([&] {
    require(handle, "handle");
    const auto& spec = handle->memory.buffer().spec();
    if (state_dim) *state_dim = spec.state_dim;
    if (action_dim) *action_dim = spec.action_dim;
    if (flat_dim) *flat_dim = spec.flat_dim();
  });
}

int nmer_ffi_strategy(const nmer_handle* handle, const char** kind, size_t* k) {
  return guarded([&] {
    require(handle, "handle");
    if (kind) *kind = handle->kind_name.c_str();
    if (k) *k = handle->memory.config().k;
  });
}

int nmer_ffi_size(const nmer_handle* handle, size_t* count) {
  return guarded([&] {
    require(handle, "handle");
    require(count, "count");
    *count = handle->memory.size();
  });
}

int nmer_ffi_insert(nmer_handle* handle, const double* s, size_t s_len, const double* a,
                    size_t a_len, double r, const double* s2, size_t s2_len, int done,
                    uint64_t episode_id, uint64_t step_idx) {
  return guarded([&] {
    require(handle, "handle");
    const auto& spec = handle->memory.buffer().spec();
    check_len("state", s_len, spec.state_dim);
    check_len("action", a_len, spec.action_dim);
    check_len("next state", s2_len, spec.state_dim);
    require(s, "s");
    require(a, "a");
    require(s2, "s2");
    handle->memory.insert({std::vector<double>(s, s + s_len), std::vector<double>(a, a + a_len), r,
                           std::vector<double>(s2, s2 + s2_len), done != 0, episode_id,
                           step_idx});
  });
}

int nmer_ffi_sample(const nmer_handle* handle, size_t n, uint64_t seed, uint64_t global_step,
                    double* flats, uint8_t* dones, double* weights, size_t* slots) {
  return guarded([&] {
    require(handle, "handle");
    if (n == 0) return;
    require(flats, "flats");
    require(dones, "dones");
    require(weights, "weights");
    require(slots, "slots");
    nmer::Rng rng(seed);
    const nmer::TrainingBatch b = handle->memory.sample(n, global_step, rng);
    std::copy(b.flats.begin(), b.flats.end(), flats);
    std::copy(b.dones.begin(), b.dones.end(), dones);
    std::copy(b.importance_weights.begin(), b.importance_weights.end(), weights);
    std::copy(b.source_slots.begin(), b.source_slots.end(), slots);
  });
}

int nmer_ffi_update_priorities(nmer_handle* handle, const size_t* slots, const double* td_errors,
                               size_t n) {
  return guarded([&] {
    require(handle, "handle");
    if (n == 0) return;
    require(slots, "slots");
    require(td_errors, "td_errors");
    handle->memory.update_priorities(std::span<const std::size_t>(slots, n),
                                     std::span<const double>(td_errors, n));
  });
}

int nmer_ffi_dump(const nmer_handle* handle, const char* path) {
  return guarded([&] {
    require(handle, "handle");
    require(path, "path");
    handle->memory.buffer().dump(std::string(path));
  });
}

}  // extern "C"
