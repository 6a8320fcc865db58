#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "dac/env.hpp"
#include "dac/error.hpp"
#include "dac/network.hpp"
#include "dac/rng.hpp"

namespace dac {

// Sinusoidal demand with Gaussian noise; the noise scale is pinned to ten
// percent of the amplitude.
struct DemandModel {
  double amplitude = 0.0;
  double omega = 0.0;
  double phase = 0.0;

  double noise_std() const { return 0.1 * amplitude; }
  double period() const { return kTwoPi / omega; }
};

// Cubic shortage penalty: zero for non-negative levels (the m = 0 boundary
// joins the zero branch), -(-m)^3 otherwise.
inline double reward_fn(double m) {
  if (m >= 0.0) return 0.0;
  const double shortage = -m;
  return -(shortage * shortage * shortage);
}

struct ResourceEnvConfig {
  int grid_rows = 2;
  int grid_cols = 3;
  std::vector<std::pair<int, int>> edges;  // overrides the grid when set
  int n_agents_override = 0;               // used with explicit edges

  double m_min = -50.0;
  double m_max = 50.0;
  double a_max = 10.0;
  double dt = 1.0;
  double m0 = 10.0;

  double amp_lo = 5.0, amp_hi = 15.0;
  double omega_lo = 0.05, omega_hi = 0.2;

  std::uint64_t demand_seed = 1;

  // When non-empty, used verbatim instead of drawing from the ranges.
  std::vector<DemandModel> explicit_demand;
};

// Resource dispatch across networked centers: each center holds a level
// m_i driven by noisy periodic demand, and the action moves resources along
// directed graph edges. Levels are projected onto [m_min, m_max] after
// every step and the demand phase wraps once per period.
class ResourceAllocationEnv : public Environment {
 public:
  explicit ResourceAllocationEnv(const ResourceEnvConfig& cfg)
      : cfg_(cfg),
        graph_(cfg.edges.empty()
                   ? TopologyGraph::grid(cfg.grid_rows, cfg.grid_cols)
                   : TopologyGraph(cfg.n_agents_override, cfg.edges)) {
    require(cfg_.m_min < cfg_.m_max, "ResourceAllocationEnv: bad level box");
    require(cfg_.a_max >= 0.0, "ResourceAllocationEnv: negative a_max");
    require(cfg_.dt > 0.0, "ResourceAllocationEnv: dt must be positive");
    if (!cfg_.explicit_demand.empty()) {
      require(static_cast<int>(cfg_.explicit_demand.size()) == num_agents(),
              "ResourceAllocationEnv: one demand model per agent");
      demand_ = cfg_.explicit_demand;
      for (const DemandModel& d : demand_)
        require(d.omega > 0.0 && d.amplitude >= 0.0,
                "ResourceAllocationEnv: bad explicit demand model");
    } else {
      require(cfg_.amp_lo > 0.0 && cfg_.amp_hi >= cfg_.amp_lo,
              "ResourceAllocationEnv: amplitudes must be positive");
      require(cfg_.omega_lo > 0.0 && cfg_.omega_hi >= cfg_.omega_lo,
              "ResourceAllocationEnv: frequencies must be positive");
      Rng demand_rng(cfg_.demand_seed);
      demand_.reserve(static_cast<std::size_t>(num_agents()));
      for (int i = 0; i < num_agents(); ++i) {
        DemandModel d;
        d.amplitude = demand_rng.uniform(cfg_.amp_lo, cfg_.amp_hi);
        d.omega = demand_rng.uniform(cfg_.omega_lo, cfg_.omega_hi);
        d.phase = demand_rng.uniform(0.0, kTwoPi);
        demand_.push_back(d);
      }
    }
    // directed edge order: for each i ascending, each neighbor j ascending
    for (int i = 0; i < num_agents(); ++i)
      for (int j : graph_.neighbors(i)) directed_edges_.emplace_back(i, j);
    reset();
  }

  const TopologyGraph& graph() const { return graph_; }
  const std::vector<DemandModel>& demand_models() const { return demand_; }
  const std::vector<std::pair<int, int>>& directed_edges() const {
    return directed_edges_;
  }
  const ResourceEnvConfig& config() const { return cfg_; }

  int num_agents() const override { return graph_.num_agents(); }
  Eigen::Index obs_dim() const override { return 3 * num_agents(); }
  Eigen::Index action_dim() const override {
    return static_cast<Eigen::Index>(directed_edges_.size());
  }

  Vector action_lo() const override { return Vector::Zero(action_dim()); }
  Vector action_hi() const override {
    return Vector::Constant(action_dim(), cfg_.a_max);
  }

  void observation_box(Vector& lo, Vector& hi) const override {
    lo.resize(obs_dim());
    hi.resize(obs_dim());
    for (int i = 0; i < num_agents(); ++i) {
      lo(3 * i) = cfg_.m_min;
      hi(3 * i) = cfg_.m_max;
      lo(3 * i + 1) = -1.0;
      hi(3 * i + 1) = 1.0;
      lo(3 * i + 2) = -1.0;
      hi(3 * i + 2) = 1.0;
    }
  }

  void reset() override {
    m_ = Vector::Constant(num_agents(), cfg_.m0);
    tbar_ = Vector::Zero(num_agents());
  }

  // Observation: per center [m_i, cos(omega_i tbar_i), sin(omega_i tbar_i)].
  // The trig encoding keeps the feature input continuous across the phase
  // wrap; the raw phase is not.
  Vector observe() const override {
    Vector obs(obs_dim());
    for (int i = 0; i < num_agents(); ++i) {
      const double angle = demand_[static_cast<std::size_t>(i)].omega * tbar_(i);
      obs(3 * i) = m_(i);
      obs(3 * i + 1) = std::cos(angle);
      obs(3 * i + 2) = std::sin(angle);
    }
    return obs;
  }

  std::vector<double> step(const Vector& action, Rng& rng) override {
    check_action(action);
    const int n = num_agents();
    // demand realized at the pre-step phase; one normal draw per agent in
    // agent order
    Vector demand(n);
    for (int i = 0; i < n; ++i) {
      const DemandModel& d = demand_[static_cast<std::size_t>(i)];
      demand(i) = d.amplitude * std::sin(d.omega * tbar_(i) + d.phase) +
                  rng.normal(0.0, d.noise_std());
    }
    Vector net = Vector::Zero(n);
    for (std::size_t e = 0; e < directed_edges_.size(); ++e) {
      const auto& [from, to] = directed_edges_[e];
      net(from) -= action(static_cast<Eigen::Index>(e));
      net(to) += action(static_cast<Eigen::Index>(e));
    }
    std::vector<double> rewards(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      m_(i) = std::clamp(m_(i) + net(i) - demand(i), cfg_.m_min, cfg_.m_max);
      const double period = demand_[static_cast<std::size_t>(i)].period();
      tbar_(i) += cfg_.dt;
      while (tbar_(i) >= 0.5 * period) tbar_(i) -= period;
      rewards[static_cast<std::size_t>(i)] = reward_fn(m_(i));
    }
    return rewards;
  }

  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<ResourceAllocationEnv>(*this);
  }

  Vector internal_state() const override {
    Vector state(2 * num_agents());
    state.head(num_agents()) = m_;
    state.tail(num_agents()) = tbar_;
    return state;
  }

  void set_internal_state(const Vector& state) override {
    require(state.size() == 2 * num_agents(),
            "set_internal_state: dimension mismatch");
    m_ = state.head(num_agents());
    tbar_ = state.tail(num_agents());
  }

  const Vector& levels() const { return m_; }
  const Vector& phases() const { return tbar_; }

  // Worst-case |r_i| given the projection box.
  double reward_bound() const {
    const double worst = std::max(0.0, -cfg_.m_min);
    return worst * worst * worst;
  }

  std::unique_ptr<BehaviorPolicy> default_behavior() const {
    return std::make_unique<UniformBehaviorPolicy>(action_lo(), action_hi());
  }

 private:
  ResourceEnvConfig cfg_;
  TopologyGraph graph_;
  std::vector<DemandModel> demand_;
  std::vector<std::pair<int, int>> directed_edges_;
  Vector m_;
  Vector tbar_;
};

}  // namespace dac
