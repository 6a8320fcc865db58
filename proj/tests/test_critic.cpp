#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dac/chain_mdp.hpp"
#include "dac/critic.hpp"

using namespace dac;

namespace {

// Two-state, two-action chain used across the critic tests. States embed at
// -1 and +1 on the line, actions are scalar.
struct ChainFixture {
  EnumerableMdp mdp;
  RbfFeatureMap map;
  PolicyParams params;

  static ChainFixture make(double theta0 = 0.3, double theta1 = -0.2) {
    Matrix state_embed(2, 1);
    state_embed << -1.0, 1.0;
    Matrix action_embed(2, 1);
    action_embed << -1.0, 1.0;
    std::vector<Matrix> P(2);
    P[0] = Matrix(2, 2);
    P[0] << 0.9, 0.1, 0.4, 0.6;
    P[1] = Matrix(2, 2);
    P[1] << 0.2, 0.8, 0.7, 0.3;
    Matrix rewards(2, 2);
    rewards << 0.3, -0.15, 0.09, 0.24;
    Matrix behavior = Matrix::Constant(2, 2, 0.5);
    EnumerableMdp mdp = chain_mdp(2, 2, P, rewards, state_embed, action_embed,
                                  behavior);
    // narrow widths keep the two basis functions nearly orthogonal, which
    // keeps the GTD system well conditioned
    RbfFeatureMap map(state_embed, Vector::Constant(2, 0.5));
    Matrix theta(2, 1);
    theta << theta0, theta1;
    return ChainFixture{std::move(mdp), std::move(map),
                        PolicyParams(theta, 0)};
  }

  Vector state_vec(int s) const { return mdp.state_embed.row(s).transpose(); }
  Vector action_vec(int a) const { return mdp.action_embed.row(a).transpose(); }
};

// Runs the sampled GTD iteration on the chain and returns the stacked
// parameters.
Vector run_gtd(const ChainFixture& fx, double gamma, long iters,
               std::uint64_t seed) {
  CriticState critic = CriticState::zeros(fx.map.size(), fx.map.size());
  Rng rng(seed);
  int s = 0;
  for (long t = 1; t <= iters; ++t) {
    const int a = fx.mdp.sample_behavior_action(s, rng);
    const int s1 = fx.mdp.sample_next_state(s, a, rng);
    const double alpha = std::pow(static_cast<double>(t), -0.55);
    critic = gtd_step_cached(critic, fx.map(fx.state_vec(s)), fx.action_vec(a),
                             fx.mdp.rewards(s, a), fx.map(fx.state_vec(s1)),
                             fx.params, gamma, alpha, alpha, 0, t);
    s = s1;
  }
  Vector z(critic.stacked_dim());
  z << critic.w, critic.v;
  return z;
}

}  // namespace

TEST_CASE("q_value") {
  const ChainFixture fx = ChainFixture::make();
  const Vector s = fx.state_vec(0);
  const Vector a = fx.action_vec(1);

  SECTION("all-zero critic scores zero") {
    const CriticState critic = CriticState::zeros(2, 2);
    CHECK(q_value(fx.map, critic, s, a, fx.params) == 0.0);
  }

  SECTION("at the target action only the baseline survives") {
    CriticState critic = CriticState::zeros(2, 2);
    Rng rng(2);
    for (Index i = 0; i < 2; ++i) {
      critic.w(i) = rng.uniform(-1.0, 1.0);
      critic.v(i) = rng.uniform(-1.0, 1.0);
    }
    const Vector pi = policy_action(fx.params, fx.map(s));
    const double q = q_value(fx.map, critic, s, pi, fx.params);
    REQUIRE_THAT(q, Catch::Matchers::WithinAbs(fx.map(s).dot(critic.v), 1e-15));
  }

  SECTION("random instance against an explicit dot-product oracle") {
    Rng rng(3);
    CriticState critic = CriticState::zeros(2, 2);
    for (Index i = 0; i < 2; ++i) {
      critic.w(i) = rng.uniform(-2.0, 2.0);
      critic.v(i) = rng.uniform(-2.0, 2.0);
    }
    const Vector phi = fx.map(s);
    // hand-expanded: q = sum_k phi_k (a - theta^T phi) w_k + sum_k phi_k v_k
    const double adv = a(0) - (fx.params.theta(0, 0) * phi(0) +
                               fx.params.theta(1, 0) * phi(1));
    double want = 0.0;
    for (int k = 0; k < 2; ++k) want += phi(k) * adv * critic.w(k);
    for (int k = 0; k < 2; ++k) want += phi(k) * critic.v(k);
    REQUIRE_THAT(q_value(fx.map, critic, s, a, fx.params),
                 Catch::Matchers::WithinAbs(want, 1e-12));
  }
}

TEST_CASE("td_error") {
  const ChainFixture fx = ChainFixture::make();

  SECTION("zero critic, zero reward") {
    const CriticState critic = CriticState::zeros(2, 2);
    const Transition tr(fx.state_vec(0), fx.action_vec(0), {0.0},
                        fx.state_vec(1), 1);
    CHECK(td_error(fx.map, critic, tr, fx.params, 0.9, 0) == 0.0);
  }

  SECTION("myopic target returns the raw reward") {
    const CriticState critic = CriticState::zeros(2, 2);
    const Transition tr(fx.state_vec(0), fx.action_vec(0), {1.5},
                        fx.state_vec(1), 1);
    CHECK(td_error(fx.map, critic, tr, fx.params, 0.0, 0) == 1.5);
  }

  SECTION("known parameters against a hand-enumerated value") {
    CriticState critic = CriticState::zeros(2, 2);
    critic.w << 0.4, -0.1;
    critic.v << 0.2, 0.6;
    const double gamma = 0.8;
    const double r = fx.mdp.rewards(0, 1);
    const Transition tr(fx.state_vec(0), fx.action_vec(1), {r},
                        fx.state_vec(1), 1);
    const Vector phi_s = fx.map(fx.state_vec(0));
    const Vector phi_s1 = fx.map(fx.state_vec(1));
    const double adv = fx.action_vec(1)(0) - fx.params.theta.col(0).dot(phi_s);
    const double q_s = adv * (phi_s(0) * critic.w(0) + phi_s(1) * critic.w(1)) +
                       phi_s(0) * critic.v(0) + phi_s(1) * critic.v(1);
    const double q_s1 = phi_s1(0) * critic.v(0) + phi_s1(1) * critic.v(1);
    const double want = r + gamma * q_s1 - q_s;
    REQUIRE_THAT(td_error(fx.map, critic, tr, fx.params, gamma, 0),
                 Catch::Matchers::WithinAbs(want, 1e-12));
  }
}

TEST_CASE("gtd_step") {
  const ChainFixture fx = ChainFixture::make();

  SECTION("fixed point of the update rule: delta = 0 and u = 0") {
    const CriticState critic = CriticState::zeros(2, 2);
    const Transition tr(fx.state_vec(0), fx.action_vec(0), {0.0},
                        fx.state_vec(1), 1);
    const CriticState next =
        gtd_step(fx.map, critic, tr, fx.params, 0.9, 0.5, 0.5);
    CHECK(next.w.isZero(0.0));
    CHECK(next.v.isZero(0.0));
    CHECK(next.u.isZero(0.0));
    CHECK(next.step_count == 1);
  }

  SECTION("single step from zero lands on alpha-scaled features") {
    const CriticState critic = CriticState::zeros(2, 2);
    const double alpha_w = 0.3, alpha_u = 0.1;
    const Transition tr(fx.state_vec(0), fx.action_vec(1), {1.0},
                        fx.state_vec(1), 1);
    const CriticState next =
        gtd_step(fx.map, critic, tr, fx.params, 0.9, alpha_w, alpha_u);
    const Vector phi = fx.map(fx.state_vec(0));
    const Vector psi_w =
        compatible_features(fx.map, fx.state_vec(0), fx.action_vec(1), fx.params);
    // delta = r = 1, u = 0: z <- alpha_w psi, u <- alpha_u psi
    REQUIRE((next.w - alpha_w * psi_w).lpNorm<Eigen::Infinity>() < 1e-15);
    REQUIRE((next.v - alpha_w * phi).lpNorm<Eigen::Infinity>() < 1e-15);
    REQUIRE((next.u.head(2) - alpha_u * psi_w).lpNorm<Eigen::Infinity>() < 1e-15);
    REQUIRE((next.u.tail(2) - alpha_u * phi).lpNorm<Eigen::Infinity>() < 1e-15);
  }

  SECTION("purity: identical inputs give identical outputs") {
    CriticState critic = CriticState::zeros(2, 2);
    critic.w << 0.4, -0.1;
    critic.u << 0.05, 0.1, -0.2, 0.3;
    const Transition tr(fx.state_vec(1), fx.action_vec(0), {0.7},
                        fx.state_vec(0), 5);
    const CriticState a = gtd_step(fx.map, critic, tr, fx.params, 0.9, 0.2, 0.1);
    const CriticState b = gtd_step(fx.map, critic, tr, fx.params, 0.9, 0.2, 0.1);
    CHECK(a.w == b.w);
    CHECK(a.v == b.v);
    CHECK(a.u == b.u);
  }

  SECTION("locality: another agent's reward never enters") {
    CriticState critic = CriticState::zeros(2, 2);
    critic.w << 0.4, -0.1;
    const Transition tr1(fx.state_vec(0), fx.action_vec(0), {0.7, 123.0},
                         fx.state_vec(1), 5);
    const Transition tr2(fx.state_vec(0), fx.action_vec(0), {0.7, -9999.0},
                         fx.state_vec(1), 5);
    const CriticState a = gtd_step(fx.map, critic, tr1, fx.params, 0.9, 0.2, 0.1);
    const CriticState b = gtd_step(fx.map, critic, tr2, fx.params, 0.9, 0.2, 0.1);
    CHECK(a.w == b.w);
    CHECK(a.v == b.v);
    CHECK(a.u == b.u);
  }

  SECTION("non-finite parameters raise a poisoned-critic error") {
    CriticState critic = CriticState::zeros(2, 2);
    critic.w << 1e308, 1e308;
    critic.v << 1e308, 1e308;
    const Transition tr(fx.state_vec(0), fx.action_vec(1), {1e308},
                        fx.state_vec(1), 42);
    try {
      gtd_step(fx.map, critic, tr, fx.params, 0.9, 1e30, 1e30);
      FAIL("expected PoisonedCritic");
    } catch (const PoisonedCritic& e) {
      CHECK(e.agent_id == 0);
      CHECK(e.step_index == 42);
    }
  }
}

TEST_CASE("fixed_point_oracle") {
  const ChainFixture fx = ChainFixture::make();
  const double gamma = 0.8;

  SECTION("zero rewards give the zero fixed point") {
    ChainFixture zero = fx;
    zero.mdp.rewards.setZero();
    const GtdFixedPoint fp =
        fixed_point_oracle(zero.mdp, zero.map, zero.params, gamma);
    CHECK(fp.z.lpNorm<Eigen::Infinity>() < 1e-12);
  }

  SECTION("gamma = 0 reduces to least-squares regression") {
    const GtdFixedPoint fp =
        fixed_point_oracle(fx.mdp, fx.map, fx.params, 0.0);
    // independent route: normal equations assembled with plain loops
    const Vector rho = fx.mdp.stationary_distribution();
    Matrix gram = Matrix::Zero(4, 4);
    Vector rhs = Vector::Zero(4);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        const Vector phi = fx.map(fx.state_vec(s));
        const double adv =
            fx.action_vec(a)(0) - fx.params.theta.col(0).dot(phi);
        Vector psi(4);
        psi << adv * phi, phi;
        const double weight = rho(s) * fx.mdp.behavior(s, a);
        gram += weight * psi * psi.transpose();
        rhs += weight * fx.mdp.rewards(s, a) * psi;
      }
    const Vector reg = gram.fullPivLu().solve(rhs);
    REQUIRE((fp.z - reg).lpNorm<Eigen::Infinity>() < 1e-10);
  }

  SECTION("cross-check against direct MSPBE minimization") {
    const GtdFixedPoint fp =
        fixed_point_oracle(fx.mdp, fx.map, fx.params, gamma);
    // with invertible A the MSPBE minimizer solves A^T C^{-1} A z = A^T C^{-1} b
    const Vector rho = fx.mdp.stationary_distribution();
    Matrix c = Matrix::Zero(4, 4);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        const Vector phi = fx.map(fx.state_vec(s));
        const double adv =
            fx.action_vec(a)(0) - fx.params.theta.col(0).dot(phi);
        Vector psi(4);
        psi << adv * phi, phi;
        c += rho(s) * fx.mdp.behavior(s, a) * psi * psi.transpose();
      }
    const Matrix c_inv = c.fullPivLu().inverse();
    const Matrix lhs = fp.A.transpose() * c_inv * fp.A;
    const Vector rhs = fp.A.transpose() * c_inv * fp.b;
    const Vector mspbe = lhs.fullPivLu().solve(rhs);
    REQUIRE((fp.z - mspbe).lpNorm<Eigen::Infinity>() < 1e-8);
  }

  SECTION("expected gtd displacement vanishes at the fixed point") {
    const GtdFixedPoint fp =
        fixed_point_oracle(fx.mdp, fx.map, fx.params, gamma);
    CriticState critic = CriticState::zeros(2, 2);
    critic.w = fp.z.head(2);
    critic.v = fp.z.tail(2);
    const Vector rho = fx.mdp.stationary_distribution();
    Vector expected_dz = Vector::Zero(4);
    Vector expected_du = Vector::Zero(4);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a)
        for (int s1 = 0; s1 < 2; ++s1) {
          const double weight = rho(s) * fx.mdp.behavior(s, a) *
                                fx.mdp.transitions[a](s, s1);
          if (weight == 0.0) continue;
          const CriticState next = gtd_step_cached(
              critic, fx.map(fx.state_vec(s)), fx.action_vec(a),
              fx.mdp.rewards(s, a), fx.map(fx.state_vec(s1)), fx.params, gamma,
              1.0, 1.0);
          Vector dz(4);
          dz << next.w - critic.w, next.v - critic.v;
          expected_dz += weight * dz;
          expected_du += weight * (next.u - critic.u);
        }
    REQUIRE(expected_dz.lpNorm<Eigen::Infinity>() < 1e-10);
    REQUIRE(expected_du.lpNorm<Eigen::Infinity>() < 1e-10);
  }

  SECTION("oracle map is Lipschitz over a theta grid") {
    Rng rng(29);
    double max_ratio = 0.0;
    for (int pair = 0; pair < 12; ++pair) {
      const ChainFixture fa =
          ChainFixture::make(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      const ChainFixture fb =
          ChainFixture::make(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      const Vector za = fixed_point_oracle(fa.mdp, fa.map, fa.params, gamma).z;
      const Vector zb = fixed_point_oracle(fb.mdp, fb.map, fb.params, gamma).z;
      const double dtheta = (fa.params.theta - fb.params.theta).norm();
      if (dtheta < 1e-9) continue;
      const double ratio = (za - zb).norm() / dtheta;
      CHECK(std::isfinite(ratio));
      max_ratio = std::max(max_ratio, ratio);
    }
    CHECK(max_ratio < 1e4);
  }
}

TEST_CASE("sampled GTD converges to the enumerated fixed point") {
  const ChainFixture fx = ChainFixture::make();
  const double gamma = 0.5;
  const GtdFixedPoint fp = fixed_point_oracle(fx.mdp, fx.map, fx.params, gamma);
  const Vector z = run_gtd(fx, gamma, 30000, 12345);
  // quick variant of the acceptance criterion (full budget lives there)
  REQUIRE((z - fp.z).norm() < 1e-2);
}
