#include "nmer/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "nmer/error.hpp"

namespace nmer {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw InvalidConfig(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw InvalidConfig(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidConfig(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_uint(key, trim(item)));
  if (out.empty()) throw InvalidConfig(key + ": expected a comma-separated list");
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Member>
Field double_field(Member member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) {
            std::invoke(member, c) = to_double(k, v);
          },
          [member](const RunConfig& c) { return fmt(std::invoke(member, c)); }};
}

template <typename Member>
Field uint_field(Member member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) {
            std::invoke(member, c) = to_uint(k, v);
          },
          [member](const RunConfig& c) { return std::to_string(std::invoke(member, c)); }};
}

// Accessors are lambdas returning references so nested members read naturally.
#define NMER_REF(expr) [](auto& c) -> auto& { return expr; }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    t.push_back({"env.name",
                 {[](RunConfig& c, const std::string&, const std::string& v) {
                    if (v != "pendulum" && v != "linear") {
                      throw InvalidConfig("env.name must be pendulum or linear, got '" + v + "'");
                    }
                    c.env.name = v;
                  },
                  [](const RunConfig& c) { return c.env.name; }}});
    t.push_back({"env.horizon", uint_field(NMER_REF(c.env.horizon))});
    t.push_back({"env.mass", double_field(NMER_REF(c.env.pendulum.mass))});
    t.push_back({"env.length", double_field(NMER_REF(c.env.pendulum.length))});
    t.push_back({"env.gravity", double_field(NMER_REF(c.env.pendulum.gravity))});
    t.push_back({"env.dt", double_field(NMER_REF(c.env.pendulum.dt))});
    t.push_back({"env.max_torque", double_field(NMER_REF(c.env.pendulum.max_torque))});
    t.push_back({"env.max_speed", double_field(NMER_REF(c.env.pendulum.max_speed))});
    t.push_back({"env.state_dim", uint_field(NMER_REF(c.env.linear_state_dim))});
    t.push_back({"env.action_dim", uint_field(NMER_REF(c.env.linear_action_dim))});
    t.push_back({"env.linear_seed", uint_field(NMER_REF(c.env.linear_seed))});
    t.push_back({"env.spectral_radius", double_field(NMER_REF(c.env.linear_spectral_radius))});
    t.push_back({"env.noise_sd", double_field(NMER_REF(c.env.linear_noise_sd))});

    t.push_back({"strategy.kind",
                 {[](RunConfig& c, const std::string&, const std::string& v) {
                    c.strategy.kind = parse_strategy_kind(v);
                  },
                  [](const RunConfig& c) { return std::string(to_string(c.strategy.kind)); }}});
    t.push_back({"strategy.k", uint_field(NMER_REF(c.strategy.k))});
    t.push_back({"strategy.exclude_self",
                 {[](RunConfig& c, const std::string& k, const std::string& v) {
                    c.strategy.exclude_self = to_bool(k, v);
                  },
                  [](const RunConfig& c) {
                    return std::string(c.strategy.exclude_self ? "true" : "false");
                  }}});
    t.push_back({"strategy.alpha", double_field(NMER_REF(c.strategy.mixup.alpha))});
    t.push_back({"strategy.lambda",
                 {[](RunConfig& c, const std::string& k, const std::string& v) {
                    if (v == "sample") {
                      c.strategy.mixup.fixed_lambda.reset();
                    } else {
                      c.strategy.mixup.fixed_lambda = to_double(k, v);
                    }
                  },
                  [](const RunConfig& c) {
                    return c.strategy.mixup.fixed_lambda ? fmt(*c.strategy.mixup.fixed_lambda)
                                                         : std::string("sample");
                  }}});
    t.push_back({"strategy.interp_fraction", double_field(NMER_REF(c.strategy.interp_fraction))});
    t.push_back(
        {"strategy.noise_sigma_scale", double_field(NMER_REF(c.strategy.noise_sigma_scale))});
    t.push_back(
        {"strategy.recompute_interval", uint_field(NMER_REF(c.strategy.recompute_interval))});
    t.push_back({"strategy.index",
                 {[](RunConfig& c, const std::string&, const std::string& v) {
                    if (v == "tree") {
                      c.strategy.index_backend = NeighborIndex::Backend::kTree;
                    } else if (v == "scan") {
                      c.strategy.index_backend = NeighborIndex::Backend::kScan;
                    } else {
                      throw InvalidConfig("strategy.index must be tree or scan");
                    }
                  },
                  [](const RunConfig& c) {
                    return std::string(c.strategy.index_backend == NeighborIndex::Backend::kTree
                                           ? "tree"
                                           : "scan");
                  }}});
    t.push_back({"per.alpha", double_field(NMER_REF(c.strategy.per_alpha))});
    t.push_back({"per.beta_initial", double_field(NMER_REF(c.strategy.per_beta_initial))});
    t.push_back({"per.beta_final", double_field(NMER_REF(c.strategy.per_beta_final))});
    t.push_back({"per.beta_anneal_steps", uint_field(NMER_REF(c.strategy.per_beta_anneal_steps))});
    t.push_back({"per.epsilon", double_field(NMER_REF(c.strategy.per_epsilon))});

    t.push_back({"buffer.capacity", uint_field(NMER_REF(c.buffer_capacity))});

    t.push_back({"td3.actor_lr", double_field(NMER_REF(c.td3.actor_lr))});
    t.push_back({"td3.critic_lr", double_field(NMER_REF(c.td3.critic_lr))});
    t.push_back({"td3.tau", double_field(NMER_REF(c.td3.tau))});
    t.push_back({"td3.gamma", double_field(NMER_REF(c.td3.gamma))});
    t.push_back({"td3.policy_delay", uint_field(NMER_REF(c.td3.policy_delay))});
    t.push_back({"td3.target_noise", double_field(NMER_REF(c.td3.target_noise))});
    t.push_back({"td3.target_noise_clip", double_field(NMER_REF(c.td3.target_noise_clip))});
    t.push_back(
        {"td3.exploration_noise_sd", double_field(NMER_REF(c.td3.exploration_noise_sd))});
    t.push_back({"td3.random_steps", uint_field(NMER_REF(c.td3.random_steps))});
    t.push_back({"td3.batch_size", uint_field(NMER_REF(c.td3.batch_size))});
    t.push_back({"td3.replay_ratio", uint_field(NMER_REF(c.td3.replay_ratio))});
    t.push_back({"td3.actor_hidden",
                 {[](RunConfig& c, const std::string& k, const std::string& v) {
                    c.td3.actor_hidden = to_sizes(k, v);
                  },
                  [](const RunConfig& c) { return fmt_sizes(c.td3.actor_hidden); }}});
    t.push_back({"td3.critic_hidden",
                 {[](RunConfig& c, const std::string& k, const std::string& v) {
                    c.td3.critic_hidden = to_sizes(k, v);
                  },
                  [](const RunConfig& c) { return fmt_sizes(c.td3.critic_hidden); }}});
    t.push_back({"td3.optimizer",
                 {[](RunConfig& c, const std::string&, const std::string& v) {
                    if (v == "sgd") {
                      c.td3.optimizer = OptimizerKind::kSgd;
                    } else if (v == "adam") {
                      c.td3.optimizer = OptimizerKind::kAdam;
                    } else {
                      throw InvalidConfig("td3.optimizer must be sgd or adam");
                    }
                  },
                  [](const RunConfig& c) {
                    return std::string(c.td3.optimizer == OptimizerKind::kSgd ? "sgd" : "adam");
                  }}});

    t.push_back({"run.total_env_steps", uint_field(NMER_REF(c.total_env_steps))});
    t.push_back({"run.eval_interval", uint_field(NMER_REF(c.eval_interval))});
    t.push_back({"run.eval_episodes", uint_field(NMER_REF(c.eval_episodes))});
    t.push_back({"run.smoothing_window", uint_field(NMER_REF(c.smoothing_window))});
    t.push_back({"run.seed", uint_field(NMER_REF(c.seed))});
    t.push_back({"run.out_dir",
                 {[](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; },
                  [](const RunConfig& c) { return c.out_dir; }}});
    t.push_back({"run.label",
                 {[](RunConfig& c, const std::string&, const std::string& v) { c.label = v; },
                  [](const RunConfig& c) { return c.label; }}});
    t.push_back({"run.dump_buffer",
                 {[](RunConfig& c, const std::string& k, const std::string& v) {
                    c.dump_buffer = to_bool(k, v);
                  },
                  [](const RunConfig& c) { return std::string(c.dump_buffer ? "true" : "false"); }}});
    return t;
  }();
  return table;
}

#undef NMER_REF

}  // namespace

std::unique_ptr<Env> make_env(const EnvConfig& cfg) {
  if (cfg.name == "pendulum") {
    PendulumParams p = cfg.pendulum;
    p.horizon = cfg.horizon;
    return std::make_unique<PendulumEnv>(p);
  }
  if (cfg.name == "linear") {
    LinearEnvParams p = make_linear_params(cfg.linear_state_dim, cfg.linear_action_dim,
                                           cfg.linear_seed, cfg.linear_spectral_radius);
    p.noise_sd = cfg.linear_noise_sd;
    p.horizon = cfg.horizon;
    return std::make_unique<LinearEnv>(std::move(p));
  }
  throw InvalidConfig("unknown environment '" + cfg.name + "'");
}

void RunConfig::validate() const {
  strategy.validate();
  td3.validate();
  if (buffer_capacity < 1) throw InvalidConfig("buffer.capacity must be >= 1");
  if (eval_interval < 1) throw InvalidConfig("run.eval_interval must be >= 1");
  if (eval_episodes < 1) throw InvalidConfig("run.eval_episodes must be >= 1");
  if (smoothing_window < 1 || smoothing_window % 2 == 0) {
    throw InvalidConfig("run.smoothing_window must be odd");
  }
  if (env.horizon < 1) throw InvalidConfig("env.horizon must be >= 1");
}

std::string RunConfig::run_label() const {
  if (!label.empty()) return label;
  std::string out = std::string(to_string(strategy.kind)) + "_rr" +
                    std::to_string(td3.replay_ratio);
  if (strategy.kind == StrategyKind::kNmer) out += "_k" + std::to_string(strategy.k);
  return out + "_seed" + std::to_string(seed);
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(cfg, key, value);
      return;
    }
  }
  throw InvalidConfig("unknown config key '" + key + "'");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [name, field] : fields()) out.push_back(name);
  return out;
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidConfig("line " + std::to_string(lineno) + ": expected key = value");
    }
    apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  base.validate();
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream f(path);
  if (!f) throw InvalidConfig("cannot open config file " + path);
  return parse_config(f, std::move(base));
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + " = " + field.get(cfg) + "\n";
  return out;
}

}  // namespace nmer
