#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "dac/error.hpp"
#include "dac/rng.hpp"

namespace dac {

using Vector = Eigen::VectorXd;

// Simulated multi-agent environment. Instances are single-owner and stepped
// sequentially; evaluation workers clone and own their copies.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int num_agents() const = 0;
  virtual Eigen::Index obs_dim() const = 0;
  virtual Eigen::Index action_dim() const = 0;
  virtual Vector action_lo() const = 0;
  virtual Vector action_hi() const = 0;

  // Box the observation lives in, used for feature-center placement.
  virtual void observation_box(Vector& lo, Vector& hi) const = 0;

  virtual void reset() = 0;
  virtual Vector observe() const = 0;
  // Advances one step and returns the per-agent rewards of the transition.
  virtual std::vector<double> step(const Vector& action, Rng& rng) = 0;

  virtual std::unique_ptr<Environment> clone() const = 0;

  // Raw mutable state for checkpointing and rollout restarts.
  virtual Vector internal_state() const = 0;
  virtual void set_internal_state(const Vector& state) = 0;

  Vector clamp_action(const Vector& a) const {
    require(a.size() == action_dim(), "clamp_action: dimension mismatch");
    return a.cwiseMax(action_lo()).cwiseMin(action_hi());
  }

  void check_action(const Vector& a) const {
    require(a.size() == action_dim(), "step: action dimension mismatch");
    require(((a - action_lo()).array() >= -1e-12).all() &&
                ((action_hi() - a).array() >= -1e-12).all(),
            "step: action out of bounds");
  }
};

// Stationary exploration policy generating all training data.
class BehaviorPolicy {
 public:
  virtual ~BehaviorPolicy() = default;
  virtual Vector sample(const Vector& obs, Rng& rng) const = 0;
  virtual std::unique_ptr<BehaviorPolicy> clone() const = 0;
};

// State-independent uniform draw over the action box; the simplest policy
// meeting the stationarity/ergodicity requirements.
class UniformBehaviorPolicy : public BehaviorPolicy {
 public:
  UniformBehaviorPolicy(Vector lo, Vector hi)
      : lo_(std::move(lo)), hi_(std::move(hi)) {
    require(lo_.size() == hi_.size(), "UniformBehaviorPolicy: box shape");
    require(((hi_ - lo_).array() >= 0.0).all(),
            "UniformBehaviorPolicy: empty box");
  }

  Vector sample(const Vector&, Rng& rng) const override {
    Vector a(lo_.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
      a(i) = rng.uniform(lo_(i), hi_(i));
    return a;
  }

  std::unique_ptr<BehaviorPolicy> clone() const override {
    return std::make_unique<UniformBehaviorPolicy>(*this);
  }

 private:
  Vector lo_, hi_;
};

// Uniform draw over a finite action set; keeps toy tasks enumerable.
class DiscreteUniformBehaviorPolicy : public BehaviorPolicy {
 public:
  explicit DiscreteUniformBehaviorPolicy(std::vector<Vector> actions)
      : actions_(std::move(actions)) {
    require(!actions_.empty(), "DiscreteUniformBehaviorPolicy: no actions");
  }

  Vector sample(const Vector&, Rng& rng) const override {
    return actions_[static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(actions_.size())))];
  }

  std::unique_ptr<BehaviorPolicy> clone() const override {
    return std::make_unique<DiscreteUniformBehaviorPolicy>(*this);
  }

  const std::vector<Vector>& actions() const { return actions_; }

 private:
  std::vector<Vector> actions_;
};

}  // namespace dac
