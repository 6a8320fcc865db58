#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "dac/actor_consensus.hpp"
#include "dac/checkpoint.hpp"
#include "dac/critic.hpp"
#include "dac/env.hpp"
#include "dac/error.hpp"
#include "dac/eval.hpp"
#include "dac/features.hpp"
#include "dac/network.hpp"
#include "dac/rng.hpp"
#include "dac/schedule.hpp"

namespace dac {

struct Seeds {
  std::uint64_t env = 1;
  std::uint64_t gossip = 2;
  std::uint64_t behavior = 3;
  std::uint64_t init = 4;

  // One base seed fans out into decorrelated per-purpose streams.
  static Seeds from_base(std::uint64_t base) {
    Seeds s;
    s.env = derive_seed(base, 1);
    s.gossip = derive_seed(base, 2);
    s.behavior = derive_seed(base, 3);
    s.init = derive_seed(base, 4);
    return s;
  }
};

struct TrainConfig {
  long steps = 50000;
  double gamma = 0.95;
  double critic_exponent = 0.55;  // alpha_w = alpha_v = alpha_u = t^-0.55
  double actor_exponent = 0.65;   // alpha_theta = k^-0.65, k = actor counter
  int subsample = 20;             // critic steps per actor update
  int grad_window = 1;            // successor states averaged per gradient
  int eval_every = 50;            // actor updates between evaluations; 0 = off
  long checkpoint_every = 0;      // env steps between checkpoints; 0 = off
  Seeds seeds;
  EvalProtocol eval;

  // Two-time-scale gate: the actor schedule must vanish relative to the
  // critic schedule, and both must be square summable but not summable.
  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0))
      throw ConfigError("TrainConfig: gamma must be in (0,1)");
    if (!(actor_exponent > critic_exponent))
      throw ConfigError(
          "TrainConfig: actor_exponent must exceed critic_exponent "
          "(two-time-scale step-size ordering)");
    if (!(critic_exponent > 0.5 && critic_exponent <= 1.0) ||
        !(actor_exponent > 0.5 && actor_exponent <= 1.0))
      throw ConfigError("TrainConfig: exponents must lie in (0.5, 1]");
    if (subsample < 1) throw ConfigError("TrainConfig: subsample >= 1");
    if (grad_window < 1 || grad_window > subsample)
      throw ConfigError("TrainConfig: grad_window must be in [1, subsample]");
    if (steps < 0) throw ConfigError("TrainConfig: negative step count");
    if (eval_every > 0) eval.validate();
  }
};

struct ActorLogRow {
  long env_step = 0;
  long actor_update = 0;
  double disagreement = 0.0;
  double alpha_theta = 0.0;
  double alpha_critic = 0.0;
};

struct EvalLogRow {
  long env_step = 0;
  long actor_update = 0;
  std::vector<double> mean_return;    // per agent
  std::vector<double> stderr_return;  // per agent
  double disagreement = 0.0;
};

struct TrainTrace {
  std::vector<ActorLogRow> actor_log;
  std::vector<EvalLogRow> eval_log;
  PolicyEnsemble final_ensemble;
  std::vector<CriticState> final_critics;
  long total_steps = 0;
  long total_actor_updates = 0;
};

using CheckpointSink = std::function<void(const Checkpoint&)>;

// One training run of the distributed actor-critic loop:
//   every step     behavior action, environment transition, one GTD update
//                  per agent on its local reward;
//   every subsample-th step   local gradients at the fresh successor state,
//                  one consensus mixing round with a fresh W_t, actor step
//                  size indexed by the actor's own counter.
// Deterministic given the seeds. Passing `resume` continues a checkpointed
// run exactly; the caller must supply the same configuration and
// collaborators that produced the checkpoint.
inline TrainTrace train(const TrainConfig& cfg, Environment& env,
                        const RbfFeatureMap& map,
                        const BehaviorPolicy& behavior,
                        WeightMatrixSampler& sampler, PolicyEnsemble ensemble,
                        std::vector<CriticState> critics,
                        const Checkpoint* resume = nullptr,
                        const CheckpointSink& checkpoint_sink = {}) {
  cfg.validate();
  ensemble.validate_shapes();
  const int n_agents = ensemble.size();
  require(n_agents == env.num_agents(),
          "train: ensemble size does not match the environment");
  require(static_cast<int>(critics.size()) == n_agents,
          "train: one critic per agent");
  require(ensemble.n_theta() == map.size(),
          "train: policy rows must match the feature count");
  require(ensemble.n_actions() == env.action_dim(),
          "train: policy columns must match the action dimension");
  require(sampler.graph().num_agents() == n_agents,
          "train: weight sampler graph size mismatch");
  validate_contraction(spectral_contraction_exact(sampler));

  Rng env_rng(cfg.seeds.env);
  Rng behavior_rng(cfg.seeds.behavior);

  long t0 = 0;
  long actor_updates = 0;
  if (resume) {
    require(resume->ensemble.size() == n_agents, "train: checkpoint mismatch");
    ensemble = resume->ensemble;
    critics = resume->critics;
    env.set_internal_state(resume->env_state);
    env_rng.set_state(resume->env_rng);
    behavior_rng.set_state(resume->behavior_rng);
    sampler.set_rng_state(resume->gossip_rng);
    t0 = resume->env_step;
    actor_updates = resume->actor_updates;
  } else {
    env.reset();
  }

  TrainTrace trace;
  const std::uint64_t eval_base = derive_seed(cfg.seeds.behavior, 0x45564131ull);
  auto run_eval = [&](long step, long k) {
    EvalLogRow row;
    row.env_step = step;
    row.actor_update = k;
    row.disagreement = disagreement_norm(ensemble);
    for (int i = 0; i < n_agents; ++i) {
      Rng eval_rng(derive_seed(eval_base,
                               static_cast<std::uint64_t>(k) * 4096u +
                                   static_cast<std::uint64_t>(i)));
      const EvalResult res = evaluate_policy(
          ensemble.params[static_cast<std::size_t>(i)], map, env, cfg.eval,
          eval_rng);
      row.mean_return.push_back(res.mean);
      row.stderr_return.push_back(res.stderr_mean);
    }
    trace.eval_log.push_back(std::move(row));
  };

  auto make_checkpoint = [&](long step) {
    Checkpoint cp;
    cp.env_step = step;
    cp.actor_updates = actor_updates;
    cp.env_rng = env_rng.state();
    cp.behavior_rng = behavior_rng.state();
    cp.gossip_rng = sampler.rng_state();
    cp.env_state = env.internal_state();
    cp.ensemble = ensemble;
    cp.critics = critics;
    return cp;
  };

  if (cfg.eval_every > 0 && !resume) run_eval(0, 0);

  Vector obs = env.observe();
  Vector phi = map(obs);
  std::vector<Matrix> gradients(static_cast<std::size_t>(n_agents));
  std::deque<Vector> recent_phi;  // successor features, newest last

  for (long t = t0 + 1; t <= cfg.steps; ++t) {
    const Vector action =
        env.clamp_action(behavior.sample(obs, behavior_rng));
    const std::vector<double> rewards = env.step(action, env_rng);
    const Vector obs_next = env.observe();
    const Vector phi_next = map(obs_next);

    const double alpha_critic = step_size(cfg.critic_exponent, t);
    for (int i = 0; i < n_agents; ++i) {
      auto& critic = critics[static_cast<std::size_t>(i)];
      critic = gtd_step_cached(critic, phi, action,
                               rewards[static_cast<std::size_t>(i)], phi_next,
                               ensemble.params[static_cast<std::size_t>(i)],
                               cfg.gamma, alpha_critic, alpha_critic, i, t);
    }

    if (cfg.grad_window > 1) {
      recent_phi.push_back(phi_next);
      if (static_cast<int>(recent_phi.size()) > cfg.grad_window)
        recent_phi.pop_front();
    }

    if (t % cfg.subsample == 0) {
      ++actor_updates;
      const double alpha_theta = step_size(cfg.actor_exponent, actor_updates);
      for (int i = 0; i < n_agents; ++i) {
        const auto& critic = critics[static_cast<std::size_t>(i)];
        if (cfg.grad_window == 1) {
          gradients[static_cast<std::size_t>(i)] = local_policy_gradient_from(
              phi_next, critic, ensemble.n_actions());
        } else {
          Matrix acc = Matrix::Zero(ensemble.n_theta(), ensemble.n_actions());
          for (const Vector& p : recent_phi)
            acc += local_policy_gradient_from(p, critic, ensemble.n_actions());
          gradients[static_cast<std::size_t>(i)] =
              acc / static_cast<double>(recent_phi.size());
        }
      }
      const Matrix weights = sampler.draw();
      ensemble =
          consensus_step(ensemble, gradients, weights, alpha_theta, t);
      trace.actor_log.push_back(ActorLogRow{t, actor_updates,
                                            disagreement_norm(ensemble),
                                            alpha_theta, alpha_critic});
      if (cfg.eval_every > 0 && actor_updates % cfg.eval_every == 0)
        run_eval(t, actor_updates);
    }

    if (cfg.checkpoint_every > 0 && checkpoint_sink &&
        t % cfg.checkpoint_every == 0)
      checkpoint_sink(make_checkpoint(t));

    obs = obs_next;
    phi = phi_next;
  }

  trace.final_ensemble = std::move(ensemble);
  trace.final_critics = std::move(critics);
  trace.total_steps = cfg.steps;
  trace.total_actor_updates = actor_updates;
  return trace;
}

}  // namespace dac
