#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "dac/error.hpp"
#include "dac/rng.hpp"

namespace dac {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Radial Gaussian basis over the global state,
//   phi_k(s) = (2 pi sigma_k^2)^{-1/2} exp(-|s - c_k|^2 / (2 sigma_k^2)).
// One instance is shared by every agent in the network. Immutable after
// construction, safe for concurrent reads.
class RbfFeatureMap {
 public:
  // centers: one row per basis function, widths: one positive sigma per row.
  RbfFeatureMap(Matrix centers, Vector widths)
      : centers_(std::move(centers)), widths_(std::move(widths)) {
    require(centers_.rows() == widths_.size(),
            "RbfFeatureMap: need one width per center");
    require(centers_.rows() > 0, "RbfFeatureMap: need at least one center");
    require((widths_.array() > 0.0).all(),
            "RbfFeatureMap: widths must be strictly positive");
    require(centers_.allFinite() && widths_.allFinite(),
            "RbfFeatureMap: non-finite center or width");
  }

  // Centers drawn uniformly over the box [lo, hi], one shared width.
  static RbfFeatureMap random(Index n_centers, const Vector& lo,
                              const Vector& hi, double width, Rng& rng) {
    require(lo.size() == hi.size(), "RbfFeatureMap::random: box shape");
    require((hi - lo).minCoeff() >= 0.0, "RbfFeatureMap::random: empty box");
    Matrix centers(n_centers, lo.size());
    for (Index k = 0; k < n_centers; ++k)
      for (Index d = 0; d < lo.size(); ++d)
        centers(k, d) = rng.uniform(lo(d), hi(d));
    return RbfFeatureMap(std::move(centers),
                         Vector::Constant(n_centers, width));
  }

  Index size() const { return centers_.rows(); }       // n_theta
  Index state_dim() const { return centers_.cols(); }

  Vector operator()(const Vector& s) const {
    require(s.size() == state_dim(),
            "eval_features: state dimension mismatch");
    Vector out(size());
    for (Index k = 0; k < size(); ++k) {
      const double sigma2 = widths_(k) * widths_(k);
      const double d2 = (s - centers_.row(k).transpose()).squaredNorm();
      out(k) = std::exp(-d2 / (2.0 * sigma2)) / std::sqrt(kTwoPi * sigma2);
    }
    return out;
  }

  // Uniform bound sum_k (2 pi sigma_k^2)^{-1/2} on |phi(s)|_1; every
  // component is strictly positive and below its own peak.
  double bound() const {
    double b = 0.0;
    for (Index k = 0; k < size(); ++k)
      b += 1.0 / std::sqrt(kTwoPi * widths_(k) * widths_(k));
    return b;
  }

  const Matrix& centers() const { return centers_; }
  const Vector& widths() const { return widths_; }

 private:
  Matrix centers_;  // n_theta x state_dim
  Vector widths_;   // n_theta
};

inline Vector eval_features(const RbfFeatureMap& map, const Vector& s) {
  return map(s);
}

// Per-agent copy of the global policy weights. theta is n_theta x n_actions;
// column j drives action component j. Flattening is always column-major.
struct PolicyParams {
  Matrix theta;
  int agent_id = 0;

  PolicyParams() = default;
  PolicyParams(Matrix t, int id) : theta(std::move(t)), agent_id(id) {}

  static PolicyParams zeros(Index n_theta, Index n_actions, int id = 0) {
    return PolicyParams(Matrix::Zero(n_theta, n_actions), id);
  }

  Vector flattened() const {
    return Eigen::Map<const Vector>(theta.data(), theta.size());
  }
};

inline Vector policy_action(const PolicyParams& params, const Vector& phi) {
  require(phi.size() == params.theta.rows(),
          "policy_action: feature dimension mismatch");
  return params.theta.transpose() * phi;
}

// grad_theta pi(s) for column-major flattened theta: block-diagonal with
// n_actions identical phi blocks. Kept factored so downstream products never
// materialize the (n_theta * n_actions) x n_actions matrix.
struct PolicyJacobian {
  Vector phi;
  Index n_actions;

  Matrix materialize() const {
    Matrix full = Matrix::Zero(phi.size() * n_actions, n_actions);
    for (Index j = 0; j < n_actions; ++j)
      full.block(j * phi.size(), j, phi.size(), 1) = phi;
    return full;
  }
};

inline PolicyJacobian policy_jacobian(const RbfFeatureMap& map,
                                      const Vector& s, Index n_actions) {
  require(n_actions >= 1, "policy_jacobian: need at least one action");
  return PolicyJacobian{map(s), n_actions};
}

// Compatible advantage features phi_w(s, a) = grad_theta pi(s) (a - pi(s)),
// i.e. the column-major flattening of phi(s) (a - pi(s))^T.
inline Vector compatible_features_from(const Vector& phi, const Vector& a,
                                       const PolicyParams& params) {
  require(a.size() == params.theta.cols(),
          "compatible_features: action dimension mismatch");
  require(phi.size() == params.theta.rows(),
          "compatible_features: feature dimension mismatch");
  Vector out(phi.size() * params.theta.cols());
  for (Index j = 0; j < params.theta.cols(); ++j)
    out.segment(j * phi.size(), phi.size()) =
        phi * (a(j) - params.theta.col(j).dot(phi));
  return out;
}

inline Vector compatible_features(const RbfFeatureMap& map, const Vector& s,
                                  const Vector& a, const PolicyParams& params) {
  return compatible_features_from(map(s), a, params);
}

}  // namespace dac
