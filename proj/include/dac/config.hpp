#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dac/env.hpp"
#include "dac/error.hpp"
#include "dac/eval.hpp"
#include "dac/features.hpp"
#include "dac/network.hpp"
#include "dac/quadratic_task.hpp"
#include "dac/resource_env.hpp"
#include "dac/trainer.hpp"

namespace dac {

namespace detail {
inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace detail

// Flat `key = value` file with [section] headers and full-line # comments.
// Keys are addressed as "section.key".
class ConfigFile {
 public:
  static ConfigFile parse_string(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = detail::trim(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[' && t.back() == ']') {
        section = detail::trim(t.substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": expected key = value");
      const std::string key = detail::trim(t.substr(0, eq));
      const std::string value = detail::trim(t.substr(eq + 1));
      if (key.empty())
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": empty key");
      cfg.values_[section.empty() ? key : section + "." + key] = value;
    }
    return cfg;
  }

  static ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  std::string get_string(const std::string& key, const std::string& dflt) const {
    const auto it = values_.find(key);
    return it == values_.end() ? dflt : it->second;
  }

  double get_double(const std::string& key, double dflt) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("junk");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": expected number, got '" +
                        it->second + "'");
    }
  }

  long get_long(const std::string& key, long dflt) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    try {
      std::size_t pos = 0;
      const long v = std::stol(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("junk");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": expected integer, got '" +
                        it->second + "'");
    }
  }

  bool get_bool(const std::string& key, bool dflt) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key " + key + ": expected bool, got '" +
                      it->second + "'");
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// "grid:RxC" or "edges:N:a-b,c-d,..."
inline TopologyGraph parse_topology(const std::string& spec) {
  if (spec.rfind("grid:", 0) == 0) {
    const std::string dims = spec.substr(5);
    const auto x = dims.find('x');
    if (x == std::string::npos)
      throw ConfigError("topology grid spec must look like grid:RxC");
    try {
      return TopologyGraph::grid(std::stoi(dims.substr(0, x)),
                                 std::stoi(dims.substr(x + 1)));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad grid topology spec: " + spec);
    }
  }
  if (spec.rfind("edges:", 0) == 0) {
    const std::string body = spec.substr(6);
    const auto colon = body.find(':');
    if (colon == std::string::npos)
      throw ConfigError("edge list spec must look like edges:N:a-b,c-d");
    int n = 0;
    std::vector<std::pair<int, int>> edges;
    try {
      n = std::stoi(body.substr(0, colon));
      std::istringstream list(body.substr(colon + 1));
      std::string item;
      while (std::getline(list, item, ',')) {
        item = detail::trim(item);
        if (item.empty()) continue;
        const auto dash = item.find('-');
        if (dash == std::string::npos) throw std::invalid_argument("edge");
        edges.emplace_back(std::stoi(item.substr(0, dash)),
                           std::stoi(item.substr(dash + 1)));
      }
    } catch (const std::exception&) {
      throw ConfigError("bad edge list spec: " + spec);
    }
    return TopologyGraph(n, std::move(edges));
  }
  throw ConfigError("unknown topology spec: " + spec);
}

enum class EnvKind { kResourceAllocation, kQuadratic };

// Everything a run needs, resolved from the config file plus CLI overrides.
struct RunConfig {
  // [run]
  std::string out_dir = "runs/out";
  int trials = 5;
  std::uint64_t seed = 20240501;
  bool plot = true;
  bool parallel = false;

  // [train]
  long steps = 50000;
  double gamma = 0.95;
  double critic_exponent = 0.55;
  double actor_exponent = 0.65;
  int subsample = 20;
  int eval_every = 50;
  long checkpoint_every = 0;

  // [network]
  std::string topology = "grid:2x3";
  std::string scheme = "metropolis";

  // [env]
  EnvKind env_kind = EnvKind::kResourceAllocation;
  ResourceEnvConfig resource;
  QuadraticTaskConfig quadratic;

  // [features]
  int n_centers = 64;
  double feature_width = 25.0;

  // [eval]
  EvalProtocol eval;

  // [gradcheck]
  int gradcheck_points = 5;
  int gradcheck_samples = 400;
  int gradcheck_fd_rollouts = 16;
  int gradcheck_fd_horizon = 60;
  double gradcheck_fd_step = 1e-2;
  int gradcheck_bootstrap = 400;
  long gradcheck_critic_iters = 200000;

  static RunConfig from_config(const ConfigFile& cfg) {
    RunConfig rc;
    rc.out_dir = cfg.get_string("run.out_dir", rc.out_dir);
    rc.trials = static_cast<int>(cfg.get_long("run.trials", rc.trials));
    rc.seed = static_cast<std::uint64_t>(cfg.get_long("run.seed",
                                                      static_cast<long>(rc.seed)));
    rc.plot = cfg.get_bool("run.plot", rc.plot);
    rc.parallel = cfg.get_bool("run.parallel", rc.parallel);
    if (rc.trials < 1) throw ConfigError("run.trials must be >= 1");

    rc.steps = cfg.get_long("train.steps", rc.steps);
    rc.gamma = cfg.get_double("train.gamma", rc.gamma);
    rc.critic_exponent =
        cfg.get_double("train.critic_exponent", rc.critic_exponent);
    rc.actor_exponent =
        cfg.get_double("train.actor_exponent", rc.actor_exponent);
    rc.subsample = static_cast<int>(cfg.get_long("train.subsample", rc.subsample));
    rc.eval_every = static_cast<int>(cfg.get_long("train.eval_every", rc.eval_every));
    rc.checkpoint_every = cfg.get_long("train.checkpoint_every",
                                       rc.checkpoint_every);

    rc.topology = cfg.get_string("network.topology", rc.topology);
    rc.scheme = cfg.get_string("network.scheme", rc.scheme);

    const std::string kind = cfg.get_string("env.kind", "resource-allocation");
    if (kind == "resource-allocation") {
      rc.env_kind = EnvKind::kResourceAllocation;
    } else if (kind == "quadratic") {
      rc.env_kind = EnvKind::kQuadratic;
    } else {
      throw ConfigError("env.kind must be resource-allocation or quadratic");
    }
    rc.resource.m_min = cfg.get_double("env.m_min", rc.resource.m_min);
    rc.resource.m_max = cfg.get_double("env.m_max", rc.resource.m_max);
    rc.resource.a_max = cfg.get_double("env.a_max", rc.resource.a_max);
    rc.resource.dt = cfg.get_double("env.dt", rc.resource.dt);
    rc.resource.m0 = cfg.get_double("env.m0", rc.resource.m0);
    rc.resource.amp_lo = cfg.get_double("env.amp_lo", rc.resource.amp_lo);
    rc.resource.amp_hi = cfg.get_double("env.amp_hi", rc.resource.amp_hi);
    rc.resource.omega_lo = cfg.get_double("env.omega_lo", rc.resource.omega_lo);
    rc.resource.omega_hi = cfg.get_double("env.omega_hi", rc.resource.omega_hi);

    rc.quadratic.n_states =
        static_cast<int>(cfg.get_long("env.quad_states", rc.quadratic.n_states));
    rc.quadratic.state_box =
        cfg.get_double("env.quad_state_box", rc.quadratic.state_box);
    rc.quadratic.target_slope =
        cfg.get_double("env.quad_slope", rc.quadratic.target_slope);
    rc.quadratic.action_box =
        cfg.get_double("env.quad_action_box", rc.quadratic.action_box);
    rc.quadratic.behavior_levels =
        static_cast<int>(cfg.get_long("env.quad_levels",
                                      rc.quadratic.behavior_levels));

    rc.n_centers = static_cast<int>(cfg.get_long("features.n_centers", rc.n_centers));
    rc.feature_width = cfg.get_double("features.width", rc.feature_width);
    if (rc.n_centers < 1) throw ConfigError("features.n_centers must be >= 1");
    if (rc.feature_width <= 0.0) throw ConfigError("features.width must be > 0");

    rc.eval.horizon = static_cast<int>(cfg.get_long("eval.horizon", rc.eval.horizon));
    rc.eval.rollouts = static_cast<int>(cfg.get_long("eval.rollouts", rc.eval.rollouts));
    rc.eval.discounted = cfg.get_bool("eval.discounted", rc.eval.discounted);
    rc.eval.gamma = rc.gamma;

    rc.gradcheck_points =
        static_cast<int>(cfg.get_long("gradcheck.points", rc.gradcheck_points));
    rc.gradcheck_samples =
        static_cast<int>(cfg.get_long("gradcheck.samples", rc.gradcheck_samples));
    rc.gradcheck_fd_rollouts = static_cast<int>(
        cfg.get_long("gradcheck.fd_rollouts", rc.gradcheck_fd_rollouts));
    rc.gradcheck_fd_horizon = static_cast<int>(
        cfg.get_long("gradcheck.fd_horizon", rc.gradcheck_fd_horizon));
    rc.gradcheck_fd_step =
        cfg.get_double("gradcheck.fd_step", rc.gradcheck_fd_step);
    rc.gradcheck_bootstrap = static_cast<int>(
        cfg.get_long("gradcheck.bootstrap", rc.gradcheck_bootstrap));
    rc.gradcheck_critic_iters =
        cfg.get_long("gradcheck.critic_iters", rc.gradcheck_critic_iters);
    return rc;
  }

  // Canonical echo; parsing it back reproduces this configuration.
  std::string echo() const {
    std::ostringstream out;
    out << "[run]\n"
        << "out_dir = " << out_dir << "\n"
        << "trials = " << trials << "\n"
        << "seed = " << seed << "\n"
        << "plot = " << (plot ? "true" : "false") << "\n"
        << "parallel = " << (parallel ? "true" : "false") << "\n\n";
    out << "[train]\n"
        << "steps = " << steps << "\n"
        << "gamma = " << fmt(gamma) << "\n"
        << "critic_exponent = " << fmt(critic_exponent) << "\n"
        << "actor_exponent = " << fmt(actor_exponent) << "\n"
        << "subsample = " << subsample << "\n"
        << "eval_every = " << eval_every << "\n"
        << "checkpoint_every = " << checkpoint_every << "\n\n";
    out << "[network]\n"
        << "topology = " << topology << "\n"
        << "scheme = " << scheme << "\n\n";
    out << "[env]\n";
    if (env_kind == EnvKind::kResourceAllocation) {
      out << "kind = resource-allocation\n"
          << "m_min = " << fmt(resource.m_min) << "\n"
          << "m_max = " << fmt(resource.m_max) << "\n"
          << "a_max = " << fmt(resource.a_max) << "\n"
          << "dt = " << fmt(resource.dt) << "\n"
          << "m0 = " << fmt(resource.m0) << "\n"
          << "amp_lo = " << fmt(resource.amp_lo) << "\n"
          << "amp_hi = " << fmt(resource.amp_hi) << "\n"
          << "omega_lo = " << fmt(resource.omega_lo) << "\n"
          << "omega_hi = " << fmt(resource.omega_hi) << "\n\n";
    } else {
      out << "kind = quadratic\n"
          << "quad_states = " << quadratic.n_states << "\n"
          << "quad_state_box = " << fmt(quadratic.state_box) << "\n"
          << "quad_slope = " << fmt(quadratic.target_slope) << "\n"
          << "quad_action_box = " << fmt(quadratic.action_box) << "\n"
          << "quad_levels = " << quadratic.behavior_levels << "\n\n";
    }
    out << "[features]\n"
        << "n_centers = " << n_centers << "\n"
        << "width = " << fmt(feature_width) << "\n\n";
    out << "[eval]\n"
        << "horizon = " << eval.horizon << "\n"
        << "rollouts = " << eval.rollouts << "\n"
        << "discounted = " << (eval.discounted ? "true" : "false") << "\n\n";
    out << "[gradcheck]\n"
        << "points = " << gradcheck_points << "\n"
        << "samples = " << gradcheck_samples << "\n"
        << "fd_rollouts = " << gradcheck_fd_rollouts << "\n"
        << "fd_horizon = " << gradcheck_fd_horizon << "\n"
        << "fd_step = " << fmt(gradcheck_fd_step) << "\n"
        << "bootstrap = " << gradcheck_bootstrap << "\n"
        << "critic_iters = " << gradcheck_critic_iters << "\n";
    return out.str();
  }

  TopologyGraph make_graph() const { return parse_topology(topology); }

  // Task realization (demand parameters, state grids) is derived from the
  // base seed only, so every trial sees the same task.
  std::unique_ptr<Environment> make_env() const {
    if (env_kind == EnvKind::kQuadratic)
      return std::make_unique<QuadraticTask>(quadratic);
    ResourceEnvConfig rec = resource;
    const TopologyGraph graph = make_graph();
    rec.edges = graph.edges();
    rec.n_agents_override = graph.num_agents();
    rec.demand_seed = derive_seed(seed, 0xD0ull);
    return std::make_unique<ResourceAllocationEnv>(rec);
  }

  RbfFeatureMap make_feature_map(const Environment& env) const {
    Vector lo, hi;
    env.observation_box(lo, hi);
    Rng center_rng(derive_seed(seed, 0xF0ull));
    return RbfFeatureMap::random(n_centers, lo, hi, feature_width, center_rng);
  }

  std::unique_ptr<BehaviorPolicy> make_behavior(const Environment& env) const {
    if (env_kind == EnvKind::kQuadratic)
      return static_cast<const QuadraticTask&>(env).default_behavior();
    return static_cast<const ResourceAllocationEnv&>(env).default_behavior();
  }

  WeightMatrixSampler make_sampler(std::uint64_t trial_seed) const {
    return WeightMatrixSampler(make_graph(), weight_scheme_from_string(scheme),
                               derive_seed(trial_seed, 2));
  }

  std::uint64_t trial_seed(int trial) const {
    return derive_seed(seed, 1000u + static_cast<std::uint64_t>(trial));
  }

  TrainConfig make_train_config(std::uint64_t trial_seed_value) const {
    TrainConfig tc;
    tc.steps = steps;
    tc.gamma = gamma;
    tc.critic_exponent = critic_exponent;
    tc.actor_exponent = actor_exponent;
    tc.subsample = subsample;
    tc.eval_every = eval_every;
    tc.checkpoint_every = checkpoint_every;
    tc.seeds = Seeds::from_base(trial_seed_value);
    tc.eval = eval;
    tc.validate();
    return tc;
  }

 private:
  static std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }
};

}  // namespace dac
