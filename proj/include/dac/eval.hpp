#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "dac/actor_consensus.hpp"
#include "dac/critic.hpp"
#include "dac/env.hpp"
#include "dac/error.hpp"
#include "dac/features.hpp"
#include "dac/rng.hpp"
#include "dac/schedule.hpp"

namespace dac {

// Runs the GTD critic on freshly sampled behavior transitions until the
// iteration budget is spent; the standard prelude before ascent_check.
inline CriticState converge_critic(const Environment& prototype,
                                   const RbfFeatureMap& map,
                                   const BehaviorPolicy& behavior,
                                   const PolicyParams& params, double gamma,
                                   long iters, double exponent, Rng& rng) {
  std::unique_ptr<Environment> env = prototype.clone();
  env->reset();
  CriticState critic =
      CriticState::zeros(map.size() * params.theta.cols(), map.size());
  Vector obs = env->observe();
  Vector phi = map(obs);
  for (long t = 1; t <= iters; ++t) {
    const Vector action = env->clamp_action(behavior.sample(obs, rng));
    const std::vector<double> rewards = env->step(action, rng);
    const Vector obs_next = env->observe();
    const Vector phi_next = map(obs_next);
    const double alpha = step_size(exponent, t);
    critic = gtd_step_cached(critic, phi, action,
                             rewards[static_cast<std::size_t>(
                                 std::max(0, params.agent_id))],
                             phi_next, params, gamma, alpha, alpha,
                             params.agent_id, t);
    obs = obs_next;
    phi = phi_next;
  }
  return critic;
}

// Figure-1 style measurement: freeze a policy, execute it for `horizon`
// steps, aggregate network-wide reward, repeat and average.
struct EvalProtocol {
  int horizon = 200;
  int rollouts = 20;
  bool discounted = false;  // default: plain accumulated reward
  double gamma = 0.95;      // used when discounted

  void validate() const {
    require(horizon >= 1 && rollouts >= 1, "EvalProtocol: bad sizes");
  }
};

struct EvalResult {
  double mean = 0.0;
  double stderr_mean = 0.0;
};

// Discounted or plain return of one rollout under the frozen deterministic
// policy. The policy output is clamped onto the action box before stepping.
inline double rollout_return(const PolicyParams& policy,
                             const RbfFeatureMap& map, Environment& env,
                             int horizon, bool discounted, double gamma,
                             Rng& rng) {
  double total = 0.0;
  double discount = 1.0;
  for (int t = 0; t < horizon; ++t) {
    const Vector obs = env.observe();
    const Vector action = env.clamp_action(policy_action(policy, map(obs)));
    const std::vector<double> rewards = env.step(action, rng);
    double net = 0.0;
    for (double r : rewards) net += r;
    total += discount * net;
    if (discounted) discount *= gamma;
  }
  return total;
}

// Mean and standard error of the rollout returns. Rollouts run on clones of
// the prototype environment; trainer state is never touched.
inline EvalResult evaluate_policy(const PolicyParams& policy,
                                  const RbfFeatureMap& map,
                                  const Environment& prototype,
                                  const EvalProtocol& protocol, Rng& rng) {
  protocol.validate();
  require(policy.theta.rows() == map.size(),
          "evaluate_policy: policy/feature shape mismatch");
  require(policy.theta.cols() == prototype.action_dim(),
          "evaluate_policy: policy/action shape mismatch");
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(protocol.rollouts));
  for (int r = 0; r < protocol.rollouts; ++r) {
    std::unique_ptr<Environment> env = prototype.clone();
    env->reset();
    returns.push_back(rollout_return(policy, map, *env, protocol.horizon,
                                     protocol.discounted, protocol.gamma,
                                     rng));
  }
  double mean = 0.0;
  for (double x : returns) mean += x;
  mean /= returns.size();
  if (!std::isfinite(mean))
    throw DivergenceError("evaluate_policy: non-finite return", policy.agent_id,
                          0);
  double var = 0.0;
  for (double x : returns) var += (x - mean) * (x - mean);
  var = returns.size() > 1 ? var / (returns.size() - 1.0) : 0.0;
  return EvalResult{mean, std::sqrt(var / returns.size())};
}

struct AscentOptions {
  int n_states = 400;     // states sampled from the behavior chain
  int burn_in = 100;
  int fd_rollouts = 16;   // rollouts per objective estimate
  int fd_horizon = 60;
  double fd_step = 1e-2;  // relative to the parameter scale
  double gamma = 0.9;
  int coord_subsample = 0;  // 0 = all coordinates
  int bootstrap = 400;
};

struct AscentResult {
  double inner_product = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool inconclusive = false;  // CI straddles zero
  Matrix grad_estimate;       // Monte-Carlo approximate gradient
  Matrix grad_fd;             // finite-difference objective gradient
};

// Estimates <grad J_beta, grad_hat J_beta> at theta_bar.
//
// grad_hat: average of phi(s) phi(s)^T sum_i W_i over states drawn from the
// stationary behavior distribution, with W_i the converged critic weights.
// grad J: central finite differences of the discounted objective, start
// states drawn from the same chain, common random numbers across the +/-
// perturbations. A percentile bootstrap over both sample sets gives the CI.
inline AscentResult ascent_check(const PolicyParams& theta_bar,
                                 const std::vector<CriticState>& critics,
                                 const RbfFeatureMap& map,
                                 const Environment& prototype,
                                 const BehaviorPolicy& behavior,
                                 const AscentOptions& opt, Rng& rng) {
  require(!critics.empty(), "ascent_check: need at least one critic");
  const Index n_theta = theta_bar.theta.rows();
  const Index n_actions = theta_bar.theta.cols();

  Matrix w_sum = Matrix::Zero(n_theta, n_actions);
  for (const CriticState& c : critics) {
    require(c.w.size() == n_theta * n_actions,
            "ascent_check: critic dimension mismatch");
    w_sum += Eigen::Map<const Matrix>(c.w.data(), n_theta, n_actions);
  }

  // sample the behavior chain once; reuse the draws for both estimates
  std::vector<Matrix> grad_terms;
  std::vector<Vector> chain_states;
  {
    std::unique_ptr<Environment> chain_env = prototype.clone();
    chain_env->reset();
    Rng chain_rng(rng.raw());
    for (int t = 0; t < opt.burn_in; ++t) {
      const Vector a = chain_env->clamp_action(
          behavior.sample(chain_env->observe(), chain_rng));
      chain_env->step(a, chain_rng);
    }
    grad_terms.reserve(static_cast<std::size_t>(opt.n_states));
    for (int t = 0; t < opt.n_states; ++t) {
      const Vector a = chain_env->clamp_action(
          behavior.sample(chain_env->observe(), chain_rng));
      chain_env->step(a, chain_rng);
      const Vector phi = map(chain_env->observe());
      grad_terms.push_back(phi * (phi.transpose() * w_sum));
      chain_states.push_back(chain_env->internal_state());
    }
  }

  // finite-difference objective gradient with common random numbers
  const double scale =
      std::max(1.0, theta_bar.theta.norm() /
                        std::sqrt(static_cast<double>(theta_bar.theta.size())));
  const double h = opt.fd_step * scale;

  std::vector<Index> coords;
  const Index total_coords = n_theta * n_actions;
  if (opt.coord_subsample <= 0 ||
      opt.coord_subsample >= static_cast<int>(total_coords)) {
    for (Index c = 0; c < total_coords; ++c) coords.push_back(c);
  } else {
    std::vector<Index> all(static_cast<std::size_t>(total_coords));
    for (Index c = 0; c < total_coords; ++c) all[static_cast<std::size_t>(c)] = c;
    for (int k = 0; k < opt.coord_subsample; ++k) {
      const int pick = rng.uniform_int(static_cast<int>(all.size()));
      coords.push_back(all[static_cast<std::size_t>(pick)]);
      all.erase(all.begin() + pick);
    }
  }

  // rollout start states and noise seeds, shared across +/- and coordinates
  std::vector<Vector> starts;
  std::vector<std::uint64_t> noise_seeds;
  for (int r = 0; r < opt.fd_rollouts; ++r) {
    starts.push_back(chain_states[static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(chain_states.size())))]);
    noise_seeds.push_back(rng.raw());
  }

  auto objective_rollout = [&](const Matrix& theta, int r) {
    std::unique_ptr<Environment> env = prototype.clone();
    env->set_internal_state(starts[static_cast<std::size_t>(r)]);
    Rng noise(noise_seeds[static_cast<std::size_t>(r)]);
    PolicyParams p(theta, theta_bar.agent_id);
    return rollout_return(p, map, *env, opt.fd_horizon, true, opt.gamma,
                          noise);
  };

  // fd_terms(c, r): per-rollout central difference for coordinate c
  Matrix fd_terms(static_cast<Index>(coords.size()), opt.fd_rollouts);
  for (std::size_t ci = 0; ci < coords.size(); ++ci) {
    Matrix plus = theta_bar.theta;
    Matrix minus = theta_bar.theta;
    plus.data()[coords[ci]] += h;
    minus.data()[coords[ci]] -= h;
    for (int r = 0; r < opt.fd_rollouts; ++r)
      fd_terms(static_cast<Index>(ci), r) =
          (objective_rollout(plus, r) - objective_rollout(minus, r)) /
          (2.0 * h);
  }

  AscentResult result;
  result.grad_estimate = Matrix::Zero(n_theta, n_actions);
  for (const Matrix& g : grad_terms) result.grad_estimate += g;
  result.grad_estimate /= static_cast<double>(grad_terms.size());
  result.grad_fd = Matrix::Zero(n_theta, n_actions);
  for (std::size_t ci = 0; ci < coords.size(); ++ci)
    result.grad_fd.data()[coords[ci]] =
        fd_terms.row(static_cast<Index>(ci)).mean();

  auto restricted_inner = [&](const std::vector<int>& state_idx,
                              const std::vector<int>& rollout_idx) {
    double inner = 0.0;
    for (std::size_t ci = 0; ci < coords.size(); ++ci) {
      double ghat = 0.0;
      for (int si : state_idx)
        ghat += grad_terms[static_cast<std::size_t>(si)].data()[coords[ci]];
      ghat /= state_idx.size();
      double gfd = 0.0;
      for (int ri : rollout_idx) gfd += fd_terms(static_cast<Index>(ci), ri);
      gfd /= rollout_idx.size();
      inner += ghat * gfd;
    }
    return inner;
  };

  std::vector<int> all_states(grad_terms.size());
  for (std::size_t i = 0; i < all_states.size(); ++i)
    all_states[i] = static_cast<int>(i);
  std::vector<int> all_rollouts(static_cast<std::size_t>(opt.fd_rollouts));
  for (std::size_t i = 0; i < all_rollouts.size(); ++i)
    all_rollouts[i] = static_cast<int>(i);
  result.inner_product = restricted_inner(all_states, all_rollouts);

  std::vector<double> boot(static_cast<std::size_t>(opt.bootstrap));
  for (int b = 0; b < opt.bootstrap; ++b) {
    std::vector<int> si(all_states.size());
    for (auto& s : si) s = rng.uniform_int(static_cast<int>(all_states.size()));
    std::vector<int> ri(all_rollouts.size());
    for (auto& r : ri)
      r = rng.uniform_int(static_cast<int>(all_rollouts.size()));
    boot[static_cast<std::size_t>(b)] = restricted_inner(si, ri);
  }
  std::sort(boot.begin(), boot.end());
  const auto pick = [&](double q) {
    const double pos = q * (boot.size() - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, boot.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return boot[lo] * (1.0 - frac) + boot[hi] * frac;
  };
  result.ci_lo = pick(0.025);
  result.ci_hi = pick(0.975);
  result.inconclusive = result.ci_lo < 0.0 && result.ci_hi > 0.0;
  return result;
}

}  // namespace dac
