#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dac/chain_mdp.hpp"
#include "dac/quadratic_task.hpp"
#include "dac/resource_env.hpp"

using namespace dac;

namespace {

// Single edge, demand switched off: pure flow bookkeeping.
ResourceEnvConfig still_pair() {
  ResourceEnvConfig cfg;
  cfg.edges = {{0, 1}};
  cfg.n_agents_override = 2;
  cfg.explicit_demand = {DemandModel{0.0, 0.5, 0.0},
                         DemandModel{0.0, 0.5, 0.0}};
  return cfg;
}

}  // namespace

TEST_CASE("reward_fn") {
  CHECK(reward_fn(5.0) == 0.0);    // surplus is never rewarded
  CHECK(reward_fn(-2.0) == -8.0);  // -(-m)^3 at m = -2
  CHECK(reward_fn(0.0) == 0.0);    // boundary joins the zero branch
  CHECK(reward_fn(-3.0) == -27.0);
}

TEST_CASE("resource env transition") {
  SECTION("no flows, no demand: levels unchanged") {
    ResourceAllocationEnv env(still_pair());
    const Vector before = env.levels();
    Rng rng(1);
    env.step(Vector::Zero(env.action_dim()), rng);
    CHECK(env.levels() == before);
  }

  SECTION("a transfer conserves resources before projection") {
    ResourceAllocationEnv env(still_pair());
    Rng rng(1);
    // directed edges on a single-edge pair: (0->1) then (1->0)
    REQUIRE(env.action_dim() == 2);
    Vector action = Vector::Zero(2);
    action(0) = 3.0;
    env.step(action, rng);
    CHECK_THAT(env.levels()(0), Catch::Matchers::WithinAbs(7.0, 1e-15));
    CHECK_THAT(env.levels()(1), Catch::Matchers::WithinAbs(13.0, 1e-15));
    CHECK_THAT(env.levels().sum(), Catch::Matchers::WithinAbs(20.0, 1e-15));
  }

  SECTION("transition formula matches a cloned-rng recomputation") {
    ResourceEnvConfig cfg;  // default 2x3 grid, random demand
    cfg.demand_seed = 99;
    ResourceAllocationEnv env(cfg);
    const Vector m0 = env.levels();
    const Vector t0 = env.phases();
    Rng rng(7);
    Rng shadow(7);  // same stream: reproduces the demand draws exactly
    Vector action(env.action_dim());
    Rng arng(5);
    for (Index e = 0; e < action.size(); ++e)
      action(e) = arng.uniform(0.0, cfg.a_max);
    env.step(action, rng);
    for (int i = 0; i < env.num_agents(); ++i) {
      const DemandModel& d = env.demand_models()[static_cast<std::size_t>(i)];
      const double demand = d.amplitude * std::sin(d.omega * t0(i) + d.phase) +
                            shadow.normal(0.0, d.noise_std());
      double net = 0.0;
      for (std::size_t e = 0; e < env.directed_edges().size(); ++e) {
        const auto& [from, to] = env.directed_edges()[e];
        if (from == i) net -= action(static_cast<Index>(e));
        if (to == i) net += action(static_cast<Index>(e));
      }
      const double want =
          std::clamp(m0(i) + net - demand, cfg.m_min, cfg.m_max);
      REQUIRE_THAT(env.levels()(i), Catch::Matchers::WithinAbs(want, 1e-12));
    }
  }

  SECTION("seeded 200-step rollout is bitwise reproducible") {
    ResourceEnvConfig cfg;
    cfg.demand_seed = 42;
    std::vector<Vector> trace1, trace2;
    for (auto* trace : {&trace1, &trace2}) {
      ResourceAllocationEnv env(cfg);
      Rng env_rng(11);
      Rng act_rng(13);
      UniformBehaviorPolicy behavior(env.action_lo(), env.action_hi());
      for (int t = 0; t < 200; ++t) {
        env.step(behavior.sample(env.observe(), act_rng), env_rng);
        trace->push_back(env.internal_state());
      }
    }
    REQUIRE(trace1.size() == trace2.size());
    for (std::size_t i = 0; i < trace1.size(); ++i)
      REQUIRE(trace1[i] == trace2[i]);
  }

  SECTION("projection and phase wrap hold at every step") {
    ResourceEnvConfig cfg;
    cfg.demand_seed = 3;
    cfg.m_min = -5.0;  // tight box so the projection actually engages
    cfg.m_max = 5.0;
    ResourceAllocationEnv env(cfg);
    Rng env_rng(17);
    Rng act_rng(19);
    UniformBehaviorPolicy behavior(env.action_lo(), env.action_hi());
    bool clamped_low = false;
    for (int t = 0; t < 500; ++t) {
      const auto rewards = env.step(behavior.sample(env.observe(), act_rng),
                                    env_rng);
      for (int i = 0; i < env.num_agents(); ++i) {
        REQUIRE(env.levels()(i) >= cfg.m_min);
        REQUIRE(env.levels()(i) <= cfg.m_max);
        const double period =
            env.demand_models()[static_cast<std::size_t>(i)].period();
        REQUIRE(env.phases()(i) >= -0.5 * period);
        REQUIRE(env.phases()(i) < 0.5 * period);
        REQUIRE(std::abs(rewards[static_cast<std::size_t>(i)]) <=
                env.reward_bound() + 1e-12);
        clamped_low = clamped_low || env.levels()(i) == cfg.m_min;
      }
    }
    CHECK(clamped_low);  // the tight box must have engaged at least once
  }

  SECTION("observation encodes levels and the demand phase angle") {
    ResourceEnvConfig cfg;
    cfg.demand_seed = 21;
    ResourceAllocationEnv env(cfg);
    Rng rng(23);
    env.step(Vector::Zero(env.action_dim()), rng);
    const Vector obs = env.observe();
    for (int i = 0; i < env.num_agents(); ++i) {
      const DemandModel& d = env.demand_models()[static_cast<std::size_t>(i)];
      CHECK(obs(3 * i) == env.levels()(i));
      CHECK_THAT(obs(3 * i + 1), Catch::Matchers::WithinAbs(
                                     std::cos(d.omega * env.phases()(i)), 1e-15));
      CHECK_THAT(obs(3 * i + 2), Catch::Matchers::WithinAbs(
                                     std::sin(d.omega * env.phases()(i)), 1e-15));
    }
  }

  SECTION("default construction pins the noise ratio to ten percent") {
    ResourceEnvConfig cfg;
    cfg.demand_seed = 77;
    ResourceAllocationEnv env(cfg);
    for (const DemandModel& d : env.demand_models()) {
      CHECK(d.amplitude >= cfg.amp_lo);
      CHECK(d.amplitude <= cfg.amp_hi);
      CHECK(d.noise_std() == 0.1 * d.amplitude);
    }
  }

  SECTION("out-of-bounds actions are rejected") {
    ResourceAllocationEnv env(still_pair());
    Rng rng(1);
    Vector action = Vector::Constant(2, 11.0);
    CHECK_THROWS_AS(env.step(action, rng), ContractViolation);
    action.setConstant(-0.5);
    CHECK_THROWS_AS(env.step(action, rng), ContractViolation);
  }
}

TEST_CASE("behavior policy") {
  SECTION("zero action box always returns zero") {
    UniformBehaviorPolicy behavior(Vector::Zero(3), Vector::Zero(3));
    Rng rng(1);
    for (int k = 0; k < 10; ++k)
      CHECK(behavior.sample(Vector::Zero(1), rng).isZero(0.0));
  }

  SECTION("empirical mean approaches a_max / 2 within three sigma") {
    const double a_max = 10.0;
    UniformBehaviorPolicy behavior(Vector::Zero(1),
                                   Vector::Constant(1, a_max));
    Rng rng(2);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int k = 0; k < n; ++k) {
      const double a = behavior.sample(Vector::Zero(1), rng)(0);
      REQUIRE(a >= 0.0);
      REQUIRE(a <= a_max);
      sum += a;
      sumsq += a * a;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    const double se = std::sqrt(var / n);
    REQUIRE(std::abs(mean - a_max / 2.0) <= 3.0 * se);
  }

  SECTION("same seed gives the same action sequence") {
    UniformBehaviorPolicy behavior(Vector::Zero(2), Vector::Constant(2, 4.0));
    Rng r1(5), r2(5);
    for (int k = 0; k < 50; ++k)
      REQUIRE(behavior.sample(Vector::Zero(1), r1) ==
              behavior.sample(Vector::Zero(1), r2));
  }
}

TEST_CASE("chain mdp") {
  SECTION("symmetric two-state chain has the uniform stationary law") {
    std::vector<Matrix> P(1);
    P[0] = Matrix(2, 2);
    P[0] << 0.3, 0.7, 0.7, 0.3;
    const EnumerableMdp mdp =
        chain_mdp(2, 1, P, Matrix::Zero(2, 1), Matrix::Identity(2, 2),
                  Matrix::Zero(1, 2), Matrix::Constant(2, 1, 1.0));
    const Vector rho = mdp.stationary_distribution();
    REQUIRE_THAT(rho(0), Catch::Matchers::WithinAbs(0.5, 1e-12));
    REQUIRE_THAT(rho(1), Catch::Matchers::WithinAbs(0.5, 1e-12));
  }

  SECTION("absorbing state violates ergodicity and is rejected") {
    std::vector<Matrix> P(1);
    P[0] = Matrix(2, 2);
    P[0] << 1.0, 0.0, 0.5, 0.5;  // state 0 absorbs
    CHECK_THROWS_AS(
        chain_mdp(2, 1, P, Matrix::Zero(2, 1), Matrix::Identity(2, 2),
                  Matrix::Zero(1, 2), Matrix::Constant(2, 1, 1.0)),
        ConfigError);
  }

  SECTION("non-stochastic transition rows are rejected") {
    std::vector<Matrix> P(1);
    P[0] = Matrix(2, 2);
    P[0] << 0.5, 0.4, 0.5, 0.5;
    CHECK_THROWS_AS(
        chain_mdp(2, 1, P, Matrix::Zero(2, 1), Matrix::Identity(2, 2),
                  Matrix::Zero(1, 2), Matrix::Constant(2, 1, 1.0)),
        ConfigError);
  }

  SECTION("random three-state chain matches the power-iteration oracle") {
    Rng rng(61);
    std::vector<Matrix> P(2, Matrix(3, 3));
    for (auto& Pa : P)
      for (int s = 0; s < 3; ++s) {
        double row_sum = 0.0;
        for (int s1 = 0; s1 < 3; ++s1) {
          Pa(s, s1) = rng.uniform(0.05, 1.0);
          row_sum += Pa(s, s1);
        }
        for (int s1 = 0; s1 < 3; ++s1) Pa(s, s1) /= row_sum;
      }
    const EnumerableMdp mdp =
        chain_mdp(3, 2, P, Matrix::Zero(3, 2), Matrix::Identity(3, 3),
                  Matrix::Zero(2, 3), Matrix::Constant(3, 2, 0.5));
    const Vector rho = mdp.stationary_distribution();

    // oracle: long power iteration from the uniform vector
    Vector mu = Vector::Constant(3, 1.0 / 3.0);
    const Matrix chain = mdp.beta_chain();
    for (int it = 0; it < 10000; ++it) mu = chain.transpose() * mu;
    mu /= mu.sum();
    REQUIRE((rho - mu).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("quadratic task") {
  QuadraticTaskConfig cfg;
  QuadraticTask task(cfg);

  SECTION("reward is the negative squared tracking error") {
    task.set_internal_state(Vector::Constant(1, 3.0));
    const double s = task.state_grid()(3);
    Rng rng(1);
    const auto rewards = task.step(Vector::Constant(1, 2.0), rng);
    REQUIRE(rewards.size() == 1);
    const double err = 2.0 - cfg.target_slope * s;
    REQUIRE_THAT(rewards[0], Catch::Matchers::WithinAbs(-err * err, 1e-15));
  }

  SECTION("closed-form gradient vanishes at the closed-form optimum") {
    Matrix centers(5, 1);
    centers << -2.0, -1.0, 0.0, 1.0, 2.0;
    RbfFeatureMap map(centers, Vector::Constant(5, 1.0));
    const Matrix theta_opt = task.optimal_theta(map);
    const Matrix grad = task.objective_gradient(map, theta_opt, 0.9);
    REQUIRE(grad.lpNorm<Eigen::Infinity>() < 1e-10);
  }

  SECTION("closed-form gradient matches finite differences of the objective") {
    Matrix centers(4, 1);
    centers << -1.5, -0.5, 0.5, 1.5;
    RbfFeatureMap map(centers, Vector::Constant(4, 0.8));
    Rng rng(3);
    Matrix theta(4, 1);
    for (Index i = 0; i < 4; ++i) theta(i, 0) = rng.uniform(-1.0, 1.0);
    const double gamma = 0.9;
    auto objective = [&](const Matrix& th) {
      double acc = 0.0;
      for (int j = 0; j < cfg.n_states; ++j) {
        const double s = task.state_grid()(j);
        const Vector phi = map(Vector::Constant(1, s));
        const double err = phi.dot(th.col(0)) - cfg.target_slope * s;
        acc -= err * err;
      }
      return acc / (cfg.n_states * (1.0 - gamma));
    };
    const Matrix grad = task.objective_gradient(map, theta, gamma);
    const double h = 1e-6;
    for (Index i = 0; i < 4; ++i) {
      Matrix tp = theta, tm = theta;
      tp(i, 0) += h;
      tm(i, 0) -= h;
      const double fd = (objective(tp) - objective(tm)) / (2.0 * h);
      REQUIRE_THAT(grad(i, 0), Catch::Matchers::WithinAbs(fd, 1e-6));
    }
  }

  SECTION("tabular view is a valid enumerable mdp with uniform stationary law") {
    const EnumerableMdp mdp = task.to_mdp();
    mdp.validate_ergodic();
    const Vector rho = mdp.stationary_distribution();
    for (int s = 0; s < mdp.n_states; ++s)
      REQUIRE_THAT(rho(s),
                   Catch::Matchers::WithinAbs(1.0 / mdp.n_states, 1e-12));
  }

  SECTION("transitions ignore the action") {
    Rng r1(9), r2(9);
    QuadraticTask t1(cfg), t2(cfg);
    t1.set_internal_state(Vector::Constant(1, 2.0));
    t2.set_internal_state(Vector::Constant(1, 2.0));
    t1.step(Vector::Constant(1, -1.0), r1);
    t2.step(Vector::Constant(1, 1.5), r2);
    CHECK(t1.internal_state() == t2.internal_state());
  }
}
