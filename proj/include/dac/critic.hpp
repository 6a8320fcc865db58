#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "dac/chain_mdp.hpp"
#include "dac/error.hpp"
#include "dac/features.hpp"

namespace dac {

// Per-agent policy-evaluation parameters: compatible advantage weights w,
// state-value baseline weights v, and the GTD correction vector u over the
// stacked feature space [phi_w; phi_v].
struct CriticState {
  Vector w;
  Vector v;
  Vector u;
  long step_count = 0;

  static CriticState zeros(Index n_w, Index n_v) {
    CriticState c;
    c.w = Vector::Zero(n_w);
    c.v = Vector::Zero(n_v);
    c.u = Vector::Zero(n_w + n_v);
    return c;
  }

  Index stacked_dim() const { return w.size() + v.size(); }
};

// One environment step as observed by every agent. Rewards are local and
// stay local: critic updates for agent i read rewards[i] only.
struct Transition {
  Vector s;
  Vector a;
  std::vector<double> rewards;
  Vector s_next;
  long t = 0;

  Transition(Vector s_, Vector a_, std::vector<double> r_, Vector s1_, long t_)
      : s(std::move(s_)),
        a(std::move(a_)),
        rewards(std::move(r_)),
        s_next(std::move(s1_)),
        t(t_) {
    require(s.allFinite() && a.allFinite() && s_next.allFinite(),
            "Transition: non-finite state or action");
    for (double r : rewards)
      require(std::isfinite(r), "Transition: non-finite reward");
  }

  double reward(int agent_id) const {
    require(agent_id >= 0 && agent_id < static_cast<int>(rewards.size()),
            "Transition: agent id out of range");
    return rewards[static_cast<std::size_t>(agent_id)];
  }
};

namespace detail {

// Baseline features: the policy features, optionally with a trailing
// constant. The constant lets the state-value level converge at the raw
// step-size rate instead of the feature-scale rate, which matters when
// rewards are orders of magnitude larger than the basis functions.
inline Index baseline_dim(Index n_phi, bool baseline_bias) {
  return n_phi + (baseline_bias ? 1 : 0);
}

// psi(s, a) = [phi_w(s, a); phi_v(s)].
inline Vector stacked_features(const Vector& phi, const Vector& a,
                               const PolicyParams& params,
                               bool baseline_bias = false) {
  const Index n_w = phi.size() * params.theta.cols();
  Vector psi(n_w + baseline_dim(phi.size(), baseline_bias));
  psi.head(n_w) = compatible_features_from(phi, a, params);
  psi.segment(n_w, phi.size()) = phi;
  if (baseline_bias) psi(psi.size() - 1) = 1.0;
  return psi;
}

// Successor features at a' = pi(s'): the advantage block is a structural
// zero because the target policy is deterministic.
inline Vector stacked_next_features(const Vector& phi_next,
                                    const PolicyParams& params,
                                    bool baseline_bias = false) {
  const Index n_w = phi_next.size() * params.theta.cols();
  Vector psi =
      Vector::Zero(n_w + baseline_dim(phi_next.size(), baseline_bias));
  psi.segment(n_w, phi_next.size()) = phi_next;
  if (baseline_bias) psi(psi.size() - 1) = 1.0;
  return psi;
}

}  // namespace detail

// Q_hat(s, a) = phi_w(s, a)^T w + phi_v(s)^T v.
inline double q_value_from(const Vector& phi, const CriticState& critic,
                           const Vector& a, const PolicyParams& params,
                           bool baseline_bias = false) {
  require(critic.w.size() == phi.size() * params.theta.cols(),
          "q_value: advantage weight dimension mismatch");
  require(critic.v.size() == detail::baseline_dim(phi.size(), baseline_bias),
          "q_value: baseline weight dimension mismatch");
  double q = compatible_features_from(phi, a, params).dot(critic.w) +
             phi.dot(critic.v.head(phi.size()));
  if (baseline_bias) q += critic.v(critic.v.size() - 1);
  return q;
}

inline double q_value(const RbfFeatureMap& map, const CriticState& critic,
                      const Vector& s, const Vector& a,
                      const PolicyParams& params, bool baseline_bias = false) {
  return q_value_from(map(s), critic, a, params, baseline_bias);
}

// delta = r_i + gamma Q_hat(s', pi(s')) - Q_hat(s, a). The successor term is
// the baseline alone since the advantage features vanish at the target action.
inline double td_error(const RbfFeatureMap& map, const CriticState& critic,
                       const Transition& tr, const PolicyParams& params,
                       double gamma, int agent_id, bool baseline_bias = false) {
  require(gamma >= 0.0 && gamma < 1.0, "td_error: gamma must be in [0,1)");
  const Vector phi_next = map(tr.s_next);
  double v_next = phi_next.dot(critic.v.head(phi_next.size()));
  if (baseline_bias) v_next += critic.v(critic.v.size() - 1);
  return tr.reward(agent_id) + gamma * v_next -
         q_value(map, critic, tr.s, tr.a, params, baseline_bias);
}

// One TDC-style update on the stacked parameterization z = [w; v]:
//   delta = r + gamma psi'^T z - psi^T z
//   z    <- z + alpha_w (delta psi - gamma (psi^T u) psi')
//   u    <- u + alpha_u (delta - psi^T u) psi
// Pure: returns the updated state, inputs untouched.
inline CriticState gtd_step_cached(const CriticState& critic,
                                   const Vector& phi, const Vector& a,
                                   double reward, const Vector& phi_next,
                                   const PolicyParams& params, double gamma,
                                   double alpha_w, double alpha_u,
                                   int agent_id = 0, long step = 0,
                                   bool baseline_bias = false) {
  require(alpha_w > 0.0 && alpha_u > 0.0, "gtd_step: step sizes positive");
  require(gamma >= 0.0 && gamma < 1.0, "gtd_step: gamma must be in [0,1)");
  const Vector psi = detail::stacked_features(phi, a, params, baseline_bias);
  const Vector psi_next =
      detail::stacked_next_features(phi_next, params, baseline_bias);
  require(psi.size() == critic.stacked_dim(),
          "gtd_step: critic dimension mismatch");

  Vector z(critic.stacked_dim());
  z << critic.w, critic.v;
  const double delta = reward + gamma * psi_next.dot(z) - psi.dot(z);
  const double psi_dot_u = psi.dot(critic.u);

  CriticState out;
  const Vector z_new = z + alpha_w * (delta * psi - gamma * psi_dot_u * psi_next);
  out.w = z_new.head(critic.w.size());
  out.v = z_new.tail(critic.v.size());
  out.u = critic.u + alpha_u * ((delta - psi_dot_u) * psi);
  out.step_count = critic.step_count + 1;

  if (!out.w.allFinite() || !out.v.allFinite() || !out.u.allFinite())
    throw PoisonedCritic("gtd_step: non-finite critic parameters", agent_id,
                         step);
  return out;
}

inline CriticState gtd_step(const RbfFeatureMap& map, const CriticState& critic,
                            const Transition& tr, const PolicyParams& params,
                            double gamma, double alpha_w, double alpha_u,
                            bool baseline_bias = false) {
  return gtd_step_cached(critic, map(tr.s), tr.a, tr.reward(params.agent_id),
                         map(tr.s_next), params, gamma, alpha_w, alpha_u,
                         params.agent_id, tr.t, baseline_bias);
}

// Exact GTD fixed point z* = A^{-1} b on an enumerable MDP, with
//   A = E_beta[psi (psi - gamma psi')^T],  b = E_beta[r psi],
// assembled by full enumeration under the stationary behavior distribution.
struct GtdFixedPoint {
  Vector z;  // stacked [w; v]
  Matrix A;
  Vector b;

  Vector w(const RbfFeatureMap& map, const PolicyParams& params) const {
    return z.head(map.size() * params.theta.cols());
  }
};

inline GtdFixedPoint fixed_point_oracle(const EnumerableMdp& mdp,
                                        const RbfFeatureMap& map,
                                        const PolicyParams& params,
                                        double gamma) {
  require(gamma >= 0.0 && gamma < 1.0, "fixed_point_oracle: gamma in [0,1)");
  require(mdp.n_states * mdp.n_actions <= 1000,
          "fixed_point_oracle: instance too large to enumerate");
  const Vector rho = mdp.stationary_distribution();

  std::vector<Vector> phi_s(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s)
    phi_s[s] = map(mdp.state_embed.row(s).transpose());

  const Index dim = map.size() * params.theta.cols() + map.size();
  Matrix A = Matrix::Zero(dim, dim);
  Vector b = Vector::Zero(dim);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double weight = rho(s) * mdp.behavior(s, a);
      if (weight == 0.0) continue;
      const Vector psi = detail::stacked_features(
          phi_s[s], mdp.action_embed.row(a).transpose(), params);
      Vector psi_next_mean = Vector::Zero(dim);
      for (int s1 = 0; s1 < mdp.n_states; ++s1) {
        const double p = mdp.transitions[a](s, s1);
        if (p > 0.0)
          psi_next_mean += p * detail::stacked_next_features(phi_s[s1], params);
      }
      A += weight * psi * (psi - gamma * psi_next_mean).transpose();
      b += weight * mdp.rewards(s, a) * psi;
    }
  }

  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible())
    throw SingularityError("fixed_point_oracle: singular A matrix");
  return GtdFixedPoint{lu.solve(b), A, b};
}

}  // namespace dac
