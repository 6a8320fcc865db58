#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "dac/chain_mdp.hpp"
#include "dac/env.hpp"
#include "dac/error.hpp"
#include "dac/features.hpp"

namespace dac {

struct QuadraticTaskConfig {
  int n_states = 9;        // scalar states evenly spaced in [-state_box, state_box]
  double state_box = 2.0;
  double target_slope = 1.5;  // reward -(a - target_slope * s)^2
  double action_box = 6.0;
  int behavior_levels = 9;    // uniform action grid over the box
};

// Scalar-state, scalar-action task with a quadratic objective and
// action-independent i.i.d. state transitions. The stationary behavior
// distribution is uniform over the state grid, so the objective
//   J(theta) = -E[(pi_theta(s) - target_slope * s)^2] / (1 - gamma)
// and its gradient and maximizer have closed forms. Used to probe the
// ascent property of the approximate gradient.
class QuadraticTask : public Environment {
 public:
  explicit QuadraticTask(const QuadraticTaskConfig& cfg) : cfg_(cfg) {
    require(cfg_.n_states >= 2, "QuadraticTask: need at least two states");
    require(cfg_.state_box > 0.0 && cfg_.action_box > 0.0,
            "QuadraticTask: boxes must be positive");
    require(cfg_.behavior_levels >= 2, "QuadraticTask: behavior grid size");
    states_.resize(cfg_.n_states);
    for (int j = 0; j < cfg_.n_states; ++j)
      states_(j) = -cfg_.state_box +
                   2.0 * cfg_.state_box * j / (cfg_.n_states - 1.0);
    reset();
  }

  const Vector& state_grid() const { return states_; }
  const QuadraticTaskConfig& config() const { return cfg_; }

  int num_agents() const override { return 1; }
  Eigen::Index obs_dim() const override { return 1; }
  Eigen::Index action_dim() const override { return 1; }
  Vector action_lo() const override {
    return Vector::Constant(1, -cfg_.action_box);
  }
  Vector action_hi() const override {
    return Vector::Constant(1, cfg_.action_box);
  }

  void observation_box(Vector& lo, Vector& hi) const override {
    lo = Vector::Constant(1, -cfg_.state_box);
    hi = Vector::Constant(1, cfg_.state_box);
  }

  void reset() override { state_index_ = 0; }

  Vector observe() const override {
    return Vector::Constant(1, states_(state_index_));
  }

  std::vector<double> step(const Vector& action, Rng& rng) override {
    check_action(action);
    const double err = action(0) - cfg_.target_slope * states_(state_index_);
    state_index_ = rng.uniform_int(cfg_.n_states);
    return {-(err * err)};
  }

  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<QuadraticTask>(*this);
  }

  Vector internal_state() const override {
    return Vector::Constant(1, static_cast<double>(state_index_));
  }

  void set_internal_state(const Vector& state) override {
    require(state.size() == 1, "set_internal_state: dimension mismatch");
    const int idx = static_cast<int>(state(0));
    require(idx >= 0 && idx < cfg_.n_states, "set_internal_state: bad index");
    state_index_ = idx;
  }

  std::vector<Vector> behavior_grid() const {
    std::vector<Vector> actions;
    actions.reserve(static_cast<std::size_t>(cfg_.behavior_levels));
    for (int g = 0; g < cfg_.behavior_levels; ++g)
      actions.push_back(Vector::Constant(
          1, -cfg_.action_box +
                 2.0 * cfg_.action_box * g / (cfg_.behavior_levels - 1.0)));
    return actions;
  }

  std::unique_ptr<BehaviorPolicy> default_behavior() const {
    return std::make_unique<DiscreteUniformBehaviorPolicy>(behavior_grid());
  }

  // Exact gradient of J(theta) over the uniform state grid.
  Matrix objective_gradient(const RbfFeatureMap& map, const Matrix& theta,
                            double gamma) const {
    Matrix grad = Matrix::Zero(theta.rows(), 1);
    for (int j = 0; j < cfg_.n_states; ++j) {
      const Vector phi = map(Vector::Constant(1, states_(j)));
      const double err = phi.dot(theta.col(0)) - cfg_.target_slope * states_(j);
      grad -= 2.0 * err * phi;
    }
    return grad / (cfg_.n_states * (1.0 - gamma));
  }

  // Exact maximizer from the normal equations of the quadratic objective.
  Matrix optimal_theta(const RbfFeatureMap& map) const {
    Matrix gram = Matrix::Zero(map.size(), map.size());
    Vector rhs = Vector::Zero(map.size());
    for (int j = 0; j < cfg_.n_states; ++j) {
      const Vector phi = map(Vector::Constant(1, states_(j)));
      gram += phi * phi.transpose();
      rhs += phi * (cfg_.target_slope * states_(j));
    }
    Eigen::FullPivLU<Matrix> lu(gram);
    if (!lu.isInvertible())
      throw SingularityError("optimal_theta: singular feature gram matrix");
    Matrix theta(map.size(), 1);
    theta.col(0) = lu.solve(rhs);
    return theta;
  }

  // Tabular view over the behavior action grid, for the enumeration oracle.
  EnumerableMdp to_mdp() const {
    EnumerableMdp mdp;
    mdp.n_states = cfg_.n_states;
    mdp.n_actions = cfg_.behavior_levels;
    const auto grid = behavior_grid();
    mdp.transitions.assign(
        static_cast<std::size_t>(mdp.n_actions),
        Matrix::Constant(mdp.n_states, mdp.n_states, 1.0 / mdp.n_states));
    mdp.rewards.resize(mdp.n_states, mdp.n_actions);
    mdp.state_embed.resize(mdp.n_states, 1);
    mdp.action_embed.resize(mdp.n_actions, 1);
    for (int j = 0; j < mdp.n_states; ++j) {
      mdp.state_embed(j, 0) = states_(j);
      for (int g = 0; g < mdp.n_actions; ++g) {
        const double err = grid[static_cast<std::size_t>(g)](0) -
                           cfg_.target_slope * states_(j);
        mdp.rewards(j, g) = -(err * err);
      }
    }
    for (int g = 0; g < mdp.n_actions; ++g)
      mdp.action_embed(g, 0) = grid[static_cast<std::size_t>(g)](0);
    mdp.behavior = Matrix::Constant(mdp.n_states, mdp.n_actions,
                                    1.0 / mdp.n_actions);
    mdp.validate();
    return mdp;
  }

 private:
  QuadraticTaskConfig cfg_;
  Vector states_;
  int state_index_ = 0;
};

}  // namespace dac
