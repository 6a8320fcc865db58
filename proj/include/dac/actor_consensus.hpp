#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "dac/critic.hpp"
#include "dac/error.hpp"
#include "dac/features.hpp"

namespace dac {

// All local policy copies theta_1..theta_N. The consensus step is the only
// place parameters cross agent boundaries.
struct PolicyEnsemble {
  std::vector<PolicyParams> params;

  static PolicyEnsemble zeros(int n_agents, Index n_theta, Index n_actions) {
    PolicyEnsemble e;
    e.params.reserve(static_cast<std::size_t>(n_agents));
    for (int i = 0; i < n_agents; ++i)
      e.params.push_back(PolicyParams::zeros(n_theta, n_actions, i));
    return e;
  }

  int size() const { return static_cast<int>(params.size()); }
  Index n_theta() const { return params.at(0).theta.rows(); }
  Index n_actions() const { return params.at(0).theta.cols(); }

  void validate_shapes() const {
    require(!params.empty(), "PolicyEnsemble: empty");
    for (const PolicyParams& p : params)
      require(p.theta.rows() == n_theta() && p.theta.cols() == n_actions(),
              "PolicyEnsemble: mismatched theta shapes");
  }
};

// Sampled off-policy gradient estimate for one agent,
//   phi(s) (phi(s)^T W_i)  with  W_i = reshape(w_i, n_theta x n_actions),
// i.e. grad pi(s) grad pi(s)^T w_i folded back to matrix shape.
inline Matrix local_policy_gradient_from(const Vector& phi,
                                         const CriticState& critic,
                                         Index n_actions) {
  require(critic.w.size() == phi.size() * n_actions,
          "local_policy_gradient: weight dimension mismatch");
  const Eigen::Map<const Matrix> w_mat(critic.w.data(), phi.size(), n_actions);
  Matrix grad(phi.size(), n_actions);
  for (Index j = 0; j < n_actions; ++j)
    grad.col(j) = phi * phi.dot(w_mat.col(j));
  return grad;
}

inline Matrix local_policy_gradient(const RbfFeatureMap& map, const Vector& s,
                                    const CriticState& critic,
                                    Index n_actions) {
  return local_policy_gradient_from(map(s), critic, n_actions);
}

// theta_i(t+1) = sum_j W_ij (theta_j(t) + alpha g_j). Each row only touches
// entries with W_ij != 0, so information flow is limited to graph neighbors.
// Pure: returns the post-mixing ensemble.
inline PolicyEnsemble consensus_step(const PolicyEnsemble& ensemble,
                                     const std::vector<Matrix>& gradients,
                                     const Matrix& weights, double alpha,
                                     long step = 0) {
  ensemble.validate_shapes();
  const int n = ensemble.size();
  require(weights.rows() == n && weights.cols() == n,
          "consensus_step: weight matrix shape mismatch");
  require(static_cast<int>(gradients.size()) == n,
          "consensus_step: one gradient per agent");
  require(alpha >= 0.0, "consensus_step: negative step size");
  for (int i = 0; i < n; ++i)
    require(std::abs(weights.row(i).sum() - 1.0) <= 1e-9,
            "consensus_step: weight matrix is not row stochastic");

  PolicyEnsemble out = ensemble;
  for (int i = 0; i < n; ++i) {
    Matrix mixed = Matrix::Zero(ensemble.n_theta(), ensemble.n_actions());
    for (int j = 0; j < n; ++j) {
      const double wij = weights(i, j);
      if (wij == 0.0) continue;  // never read beyond the neighborhood
      mixed += wij * (ensemble.params[static_cast<std::size_t>(j)].theta +
                      alpha * gradients[static_cast<std::size_t>(j)]);
    }
    if (!mixed.allFinite())
      throw PoisonedActor("consensus_step: non-finite policy parameters", i,
                          step);
    out.params[static_cast<std::size_t>(i)].theta = std::move(mixed);
  }
  return out;
}

// Network average of the local parameters.
inline PolicyParams mean_policy(const PolicyEnsemble& ensemble) {
  ensemble.validate_shapes();
  Matrix mean = Matrix::Zero(ensemble.n_theta(), ensemble.n_actions());
  for (const PolicyParams& p : ensemble.params) mean += p.theta;
  mean /= static_cast<double>(ensemble.size());
  return PolicyParams(std::move(mean), -1);
}

// |theta - 1 (x) theta_bar|_2 over the flattened stacked parameters.
inline double disagreement_norm(const PolicyEnsemble& ensemble) {
  const Matrix mean = mean_policy(ensemble).theta;
  double sq = 0.0;
  for (const PolicyParams& p : ensemble.params)
    sq += (p.theta - mean).squaredNorm();
  return std::sqrt(sq);
}

}  // namespace dac
