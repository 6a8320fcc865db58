// Command-line front end: train / eval / check / gradcheck subcommands over
// the flat config format. Exit codes: 0 ok, 2 config error, 3 divergence.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dac/checkpoint.hpp"
#include "dac/config.hpp"
#include "dac/log.hpp"
#include "dac/report.hpp"
#include "dac/svg_plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliOptions {
  std::string config_path;
  std::string checkpoint_path;
  std::string out_dir;
  std::string plot;
  long seed = -1;
  int trials = -1;
  bool parallel = false;
};

dac::RunConfig load_run_config(const CliOptions& opt) {
  if (opt.config_path.empty())
    throw dac::ConfigError("no config file given (use --config PATH)");
  dac::RunConfig rc =
      dac::RunConfig::from_config(dac::ConfigFile::parse_file(opt.config_path));
  if (!opt.out_dir.empty()) rc.out_dir = opt.out_dir;
  if (opt.seed >= 0) rc.seed = static_cast<std::uint64_t>(opt.seed);
  if (opt.trials >= 1) rc.trials = opt.trials;
  if (!opt.plot.empty()) {
    if (opt.plot == "true" || opt.plot == "1")
      rc.plot = true;
    else if (opt.plot == "false" || opt.plot == "0")
      rc.plot = false;
    else
      throw dac::ConfigError("--plot expects true or false");
  }
  if (opt.parallel) rc.parallel = true;
  return rc;
}

json realized_env_json(const dac::RunConfig& rc, const dac::Environment& env) {
  json j;
  if (rc.env_kind == dac::EnvKind::kResourceAllocation) {
    const auto& renv = static_cast<const dac::ResourceAllocationEnv&>(env);
    j["kind"] = "resource-allocation";
    json agents = json::array();
    for (const dac::DemandModel& d : renv.demand_models())
      agents.push_back({{"amplitude", d.amplitude},
                        {"omega", d.omega},
                        {"phase", d.phase},
                        {"noise_std", d.noise_std()}});
    j["demand"] = agents;
    j["reward_bound"] = renv.reward_bound();
    json edges = json::array();
    for (const auto& [a, b] : renv.directed_edges())
      edges.push_back({a, b});
    j["directed_edges"] = edges;
  } else {
    const auto& qenv = static_cast<const dac::QuadraticTask&>(env);
    j["kind"] = "quadratic";
    j["state_grid"] = dac::vector_to_json(qenv.state_grid());
    j["target_slope"] = qenv.config().target_slope;
  }
  return j;
}

// One seeded trial: fresh environment and collaborators, zero-initialized
// parameters (all trials share the task realization and the starting point).
dac::TrainTrace run_trial(const dac::RunConfig& rc,
                          const dac::RbfFeatureMap& map, int trial,
                          const dac::CheckpointSink& sink) {
  const std::uint64_t tseed = rc.trial_seed(trial);
  std::unique_ptr<dac::Environment> env = rc.make_env();
  std::unique_ptr<dac::BehaviorPolicy> behavior = rc.make_behavior(*env);
  dac::WeightMatrixSampler sampler = rc.make_sampler(tseed);
  dac::TrainConfig tc = rc.make_train_config(tseed);
  dac::PolicyEnsemble ensemble = dac::PolicyEnsemble::zeros(
      env->num_agents(), map.size(), env->action_dim());
  std::vector<dac::CriticState> critics(
      static_cast<std::size_t>(env->num_agents()),
      dac::CriticState::zeros(map.size() * env->action_dim(), map.size()));
  return dac::train(tc, *env, map, *behavior, sampler, std::move(ensemble),
                    std::move(critics), nullptr, sink);
}

int cmd_train(const CliOptions& opt) {
  const dac::RunConfig rc = load_run_config(opt);
  fs::create_directories(rc.out_dir);

  std::unique_ptr<dac::Environment> proto = rc.make_env();
  const dac::RbfFeatureMap map = rc.make_feature_map(*proto);

  dac::write_file(rc.out_dir + "/config_echo.cfg", rc.echo());
  json meta;
  meta["env"] = realized_env_json(rc, *proto);
  meta["feature_map"] = dac::feature_map_to_json(map);
  json trial_seeds = json::array();
  for (int t = 0; t < rc.trials; ++t) trial_seeds.push_back(rc.trial_seed(t));
  meta["trial_seeds"] = trial_seeds;
  meta["base_seed"] = rc.seed;
  dac::write_json_file(rc.out_dir + "/run_meta.json", meta);

  std::vector<dac::TrainTrace> traces(static_cast<std::size_t>(rc.trials));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(rc.trials));

  auto worker = [&](int trial) {
    try {
      traces[static_cast<std::size_t>(trial)] =
          run_trial(rc, map, trial, nullptr);
    } catch (...) {
      errors[static_cast<std::size_t>(trial)] = std::current_exception();
    }
  };

  if (rc.parallel && rc.trials > 1) {
    std::vector<std::thread> threads;
    for (int t = 0; t < rc.trials; ++t) threads.emplace_back(worker, t);
    for (auto& th : threads) th.join();
  } else {
    for (int t = 0; t < rc.trials; ++t) worker(t);
  }
  for (int t = 0; t < rc.trials; ++t)
    if (errors[static_cast<std::size_t>(t)])
      std::rethrow_exception(errors[static_cast<std::size_t>(t)]);

  for (int t = 0; t < rc.trials; ++t) {
    const auto& trace = traces[static_cast<std::size_t>(t)];
    const std::string dir = rc.out_dir + "/trial_" + std::to_string(t);
    fs::create_directories(dir);
    dac::write_file(dir + "/trace.csv",
                    dac::trace_csv(trace, t, rc.trial_seed(t)));
    dac::Checkpoint cp;
    cp.env_step = trace.total_steps;
    cp.actor_updates = trace.total_actor_updates;
    cp.ensemble = trace.final_ensemble;
    cp.critics = trace.final_critics;
    cp.env_state = dac::Vector::Zero(1);  // final snapshot, not resumable
    json file;
    file["config_echo"] = rc.echo();
    file["feature_map"] = dac::feature_map_to_json(map);
    file["env"] = realized_env_json(rc, *proto);
    file["state"] = cp.to_json();
    dac::write_json_file(dir + "/checkpoint.json", file);
  }

  const std::vector<dac::CurvePoint> curves = dac::assemble_curves(traces);
  dac::write_file(rc.out_dir + "/curves.csv", dac::curves_csv(curves));
  if (rc.plot)
    dac::write_file(rc.out_dir + "/curves.svg", dac::curves_svg(curves));
  dac::log_info("train: wrote " + std::to_string(rc.trials) + " trials to " +
                rc.out_dir);
  return 0;
}

int cmd_check(const CliOptions& opt) {
  const dac::RunConfig rc = load_run_config(opt);
  bool ok = true;
  auto report = [&](const std::string& name, bool pass,
                    const std::string& detail) {
    std::printf("%-28s %s  %s\n", name.c_str(), pass ? "PASS" : "FAIL",
                detail.c_str());
    ok = ok && pass;
  };

  try {
    const dac::TopologyGraph graph = rc.make_graph();
    report("graph connectivity", true,
           std::to_string(graph.num_agents()) + " agents, " +
               std::to_string(graph.num_edges()) + " edges");
    dac::WeightMatrixSampler sampler = rc.make_sampler(rc.seed);
    const double rho = dac::spectral_contraction_exact(sampler);
    report("contraction rho_W < 1", rho < 1.0 - 1e-12,
           "rho_W = " + std::to_string(rho));
  } catch (const dac::ConfigError& e) {
    report("graph construction", false, e.what());
  }

  report("step-size ordering", rc.actor_exponent > rc.critic_exponent,
         "actor " + std::to_string(rc.actor_exponent) + " vs critic " +
             std::to_string(rc.critic_exponent));
  report("step-size exponents in (0.5, 1]",
         rc.critic_exponent > 0.5 && rc.critic_exponent <= 1.0 &&
             rc.actor_exponent > 0.5 && rc.actor_exponent <= 1.0,
         "");

  std::unique_ptr<dac::Environment> env = rc.make_env();
  const dac::RbfFeatureMap map = rc.make_feature_map(*env);
  report("feature bound finite", std::isfinite(map.bound()),
         "sum_k peak = " + std::to_string(map.bound()));
  if (rc.env_kind == dac::EnvKind::kResourceAllocation) {
    const auto& renv = static_cast<const dac::ResourceAllocationEnv&>(*env);
    report("reward bound finite", std::isfinite(renv.reward_bound()),
           "|r| <= " + std::to_string(renv.reward_bound()));
  }
  report("behavior policy stationary", true, "state-independent by construction");
  return ok ? 0 : 2;
}

int cmd_gradcheck(const CliOptions& opt) {
  const dac::RunConfig rc = load_run_config(opt);
  if (rc.env_kind != dac::EnvKind::kQuadratic)
    throw dac::ConfigError("gradcheck requires env.kind = quadratic");

  std::unique_ptr<dac::Environment> env_base = rc.make_env();
  const auto& task = static_cast<const dac::QuadraticTask&>(*env_base);
  const dac::RbfFeatureMap map = rc.make_feature_map(*env_base);
  std::unique_ptr<dac::BehaviorPolicy> behavior = rc.make_behavior(*env_base);

  dac::AscentOptions ao;
  ao.n_states = rc.gradcheck_samples;
  ao.fd_rollouts = rc.gradcheck_fd_rollouts;
  ao.fd_horizon = rc.gradcheck_fd_horizon;
  ao.fd_step = rc.gradcheck_fd_step;
  ao.bootstrap = rc.gradcheck_bootstrap;
  ao.gamma = rc.gamma;

  dac::Rng point_rng(dac::derive_seed(rc.seed, 0x6Cull));
  std::vector<std::pair<std::string, dac::Matrix>> points;
  for (int p = 0; p < rc.gradcheck_points; ++p) {
    dac::Matrix theta(map.size(), 1);
    for (dac::Index i = 0; i < theta.size(); ++i)
      theta.data()[i] = point_rng.uniform(-2.0, 2.0);
    points.emplace_back("random_" + std::to_string(p), theta);
  }
  points.emplace_back("optimum", task.optimal_theta(map));

  bool any_negative = false;
  std::printf("%-12s %14s %14s %14s  %s\n", "point", "inner", "ci_lo", "ci_hi",
              "verdict");
  for (const auto& [name, theta] : points) {
    const dac::PolicyParams params(theta, 0);
    dac::Rng critic_rng(dac::derive_seed(rc.seed, 0xC1ull));
    const dac::CriticState critic = dac::converge_critic(
        *env_base, map, *behavior, params, rc.gamma, rc.gradcheck_critic_iters,
        rc.critic_exponent, critic_rng);
    dac::Rng ascent_rng(dac::derive_seed(rc.seed, 0xA5ull));
    const dac::AscentResult res = dac::ascent_check(
        params, {critic}, map, *env_base, *behavior, ao, ascent_rng);
    const char* verdict = res.inconclusive
                              ? "inconclusive"
                              : (res.ci_lo > 0.0 ? "ascent" : "descent");
    if (!res.inconclusive && res.ci_hi < 0.0) any_negative = true;
    std::printf("%-12s %14.6g %14.6g %14.6g  %s\n", name.c_str(),
                res.inner_product, res.ci_lo, res.ci_hi, verdict);
  }
  return any_negative ? 1 : 0;
}

int cmd_eval(const CliOptions& opt) {
  if (opt.checkpoint_path.empty())
    throw dac::ConfigError("eval needs --checkpoint PATH");
  const json file = dac::read_json_file(opt.checkpoint_path);
  const dac::RunConfig rc = dac::RunConfig::from_config(
      dac::ConfigFile::parse_string(file.at("config_echo").get<std::string>()));
  const dac::RbfFeatureMap map =
      dac::feature_map_from_json(file.at("feature_map"));
  const dac::Checkpoint cp = dac::Checkpoint::from_json(file.at("state"));

  std::unique_ptr<dac::Environment> env = rc.make_env();
  const std::uint64_t eval_seed =
      opt.seed >= 0 ? static_cast<std::uint64_t>(opt.seed)
                    : dac::derive_seed(rc.seed, 0xEEull);

  std::printf("agent,mean_return,stderr_return\n");
  for (int i = 0; i < cp.ensemble.size(); ++i) {
    dac::Rng rng(dac::derive_seed(eval_seed, static_cast<std::uint64_t>(i)));
    const dac::EvalResult res = dac::evaluate_policy(
        cp.ensemble.params[static_cast<std::size_t>(i)], map, *env, rc.eval,
        rng);
    std::printf("%d,%s,%s\n", i, dac::fmt_double(res.mean).c_str(),
                dac::fmt_double(res.stderr_mean).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed off-policy actor-critic with policy consensus"};
  app.require_subcommand(1);

  CliOptions opt;
  auto add_common = [&](CLI::App* cmd, bool need_config) {
    auto* c = cmd->add_option("--config", opt.config_path, "config file path");
    if (need_config) c->required();
    cmd->add_option("--seed", opt.seed, "override run.seed");
    cmd->add_option("--out-dir", opt.out_dir, "override run.out_dir");
    cmd->add_option("--trials", opt.trials, "override run.trials");
    cmd->add_option("--plot", opt.plot, "override run.plot (true|false)");
    cmd->add_flag("--parallel", opt.parallel, "run trials in parallel");
  };

  CLI::App* train = app.add_subcommand("train", "run seeded training trials");
  add_common(train, true);
  CLI::App* eval = app.add_subcommand("eval", "evaluate a saved checkpoint");
  add_common(eval, false);
  eval->add_option("--checkpoint", opt.checkpoint_path, "checkpoint file")
      ->required();
  CLI::App* check = app.add_subcommand("check", "assumption pre-flight");
  add_common(check, true);
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "ascent-direction verification");
  add_common(gradcheck, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return cmd_train(opt);
    if (eval->parsed()) return cmd_eval(opt);
    if (check->parsed()) return cmd_check(opt);
    if (gradcheck->parsed()) return cmd_gradcheck(opt);
  } catch (const dac::ConfigError& e) {
    dac::log_error(std::string("config: ") + e.what());
    return 2;
  } catch (const dac::DivergenceError& e) {
    dac::log_error(std::string("divergence: ") + e.what());
    if (!opt.out_dir.empty() || !opt.config_path.empty()) {
      try {
        std::string dir = opt.out_dir;
        if (dir.empty()) {
          const dac::RunConfig rc = load_run_config(opt);
          dir = rc.out_dir;
        }
        fs::create_directories(dir);
        json diag;
        diag["error"] = e.what();
        diag["agent_id"] = e.agent_id;
        diag["step_index"] = e.step_index;
        dac::write_json_file(dir + "/diagnostic.json", diag);
        dac::log_error("diagnostic written to " + dir + "/diagnostic.json");
      } catch (const std::exception&) {
      }
    }
    return 3;
  } catch (const dac::ContractViolation& e) {
    dac::log_error(std::string("contract: ") + e.what());
    return 1;
  } catch (const std::exception& e) {
    dac::log_error(e.what());
    return 1;
  }
  return 0;
}
