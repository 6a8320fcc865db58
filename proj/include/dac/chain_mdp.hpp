#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <utility>
#include <vector>

#include "dac/error.hpp"
#include "dac/features.hpp"
#include "dac/rng.hpp"

namespace dac {

// Tabular MDP with continuous embeddings, small enough to enumerate exactly.
// Backs the critic fixed-point oracle and the gradient sanity tasks: the
// policy and critic machinery see only the embedded state/action vectors.
struct EnumerableMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<Matrix> transitions;  // transitions[a](s, s') = P(s'|s, a)
  Matrix rewards;                   // (n_states x n_actions)
  Matrix state_embed;               // n_states x obs_dim
  Matrix action_embed;              // n_actions x action_dim
  Matrix behavior;                  // beta(a|s), rows sum to one

  Index obs_dim() const { return state_embed.cols(); }
  Index action_dim() const { return action_embed.cols(); }

  void validate() const {
    require(n_states >= 1 && n_actions >= 1, "EnumerableMdp: empty tables");
    require(static_cast<int>(transitions.size()) == n_actions,
            "EnumerableMdp: one transition matrix per action");
    for (const Matrix& P : transitions) {
      require(P.rows() == n_states && P.cols() == n_states,
              "EnumerableMdp: transition matrix shape");
      require(P.minCoeff() >= 0.0, "EnumerableMdp: negative probability");
      for (int s = 0; s < n_states; ++s)
        if (std::abs(P.row(s).sum() - 1.0) > 1e-12)
          throw ConfigError("EnumerableMdp: non-stochastic transition row");
    }
    require(rewards.rows() == n_states && rewards.cols() == n_actions,
            "EnumerableMdp: reward table shape");
    require(behavior.rows() == n_states && behavior.cols() == n_actions,
            "EnumerableMdp: behavior table shape");
    require(behavior.minCoeff() >= 0.0, "EnumerableMdp: negative behavior");
    for (int s = 0; s < n_states; ++s)
      if (std::abs(behavior.row(s).sum() - 1.0) > 1e-12)
        throw ConfigError("EnumerableMdp: non-stochastic behavior row");
    require(state_embed.rows() == n_states, "EnumerableMdp: state embeds");
    require(action_embed.rows() == n_actions, "EnumerableMdp: action embeds");
  }

  // Markov matrix of the state chain under the behavior policy.
  Matrix beta_chain() const {
    Matrix P = Matrix::Zero(n_states, n_states);
    for (int a = 0; a < n_actions; ++a)
      P += behavior.col(a).asDiagonal() * transitions[a];
    return P;
  }

  // Rejects chains that are not irreducible and aperiodic under beta
  // (Wielandt primitivity bound on the boolean chain).
  void validate_ergodic() const {
    const Matrix P = beta_chain();
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> reach =
        (P.array() > 0.0).matrix();
    const int n = n_states;
    const int cap = (n - 1) * (n - 1) + 1;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> acc = reach;
    for (int step = 1; step < cap; ++step) {
      if (acc.all()) return;
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> next(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          bool v = false;
          for (int k = 0; k < n && !v; ++k) v = acc(i, k) && reach(k, j);
          next(i, j) = v;
        }
      acc = next;
    }
    if (!acc.all())
      throw ConfigError(
          "EnumerableMdp: behavior chain is not irreducible+aperiodic");
  }

  // Stationary distribution of the behavior chain via the unit eigenvector
  // of the transposed transition matrix.
  Vector stationary_distribution() const {
    const Matrix P = beta_chain();
    Eigen::EigenSolver<Matrix> es(P.transpose());
    int best = 0;
    double best_gap = 1e300;
    for (int i = 0; i < n_states; ++i) {
      const double gap = std::abs(es.eigenvalues()(i) - std::complex<double>(1.0, 0.0));
      if (gap < best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    require(best_gap < 1e-8, "stationary_distribution: no unit eigenvalue");
    Vector rho = es.eigenvectors().col(best).real();
    rho /= rho.sum();
    require(rho.minCoeff() > -1e-12, "stationary_distribution: negative mass");
    return rho.cwiseMax(0.0) / rho.cwiseMax(0.0).sum();
  }

  int sample_behavior_action(int state, Rng& rng) const {
    double x = rng.canonical();
    for (int a = 0; a < n_actions; ++a) {
      x -= behavior(state, a);
      if (x < 0.0) return a;
    }
    return n_actions - 1;
  }

  int sample_next_state(int state, int action, Rng& rng) const {
    double x = rng.canonical();
    for (int s = 0; s < n_states; ++s) {
      x -= transitions[action](state, s);
      if (x < 0.0) return s;
    }
    return n_states - 1;
  }
};

// Builder with the documented small-instance contract. Rejects tables that
// violate stochasticity or ergodicity under the behavior policy.
inline EnumerableMdp chain_mdp(int n_states, int n_actions,
                               std::vector<Matrix> transitions, Matrix rewards,
                               Matrix state_embed, Matrix action_embed,
                               Matrix behavior) {
  require(n_states <= 10, "chain_mdp: at most 10 states");
  require(n_actions <= 4, "chain_mdp: at most 4 actions");
  EnumerableMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.transitions = std::move(transitions);
  mdp.rewards = std::move(rewards);
  mdp.state_embed = std::move(state_embed);
  mdp.action_embed = std::move(action_embed);
  mdp.behavior = std::move(behavior);
  mdp.validate();
  mdp.validate_ergodic();
  return mdp;
}

}  // namespace dac
