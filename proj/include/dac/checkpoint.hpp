#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dac/actor_consensus.hpp"
#include "dac/critic.hpp"
#include "dac/error.hpp"
#include "dac/features.hpp"

namespace dac {

inline nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector vector_from_json(const nlohmann::json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i)
    v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const Index rows = static_cast<Index>(j.size());
  require(rows > 0, "matrix_from_json: empty matrix");
  const Index cols = static_cast<Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      m(r, c) = j.at(static_cast<std::size_t>(r))
                    .at(static_cast<std::size_t>(c))
                    .get<double>();
  return m;
}

// Full mutable training state. Restoring it continues a run exactly as if
// it had never stopped: doubles survive the JSON round trip unchanged and
// the RNG strings capture whole engine states.
struct Checkpoint {
  long env_step = 0;
  long actor_updates = 0;
  std::string env_rng;
  std::string behavior_rng;
  std::string gossip_rng;
  Vector env_state;
  PolicyEnsemble ensemble;
  std::vector<CriticState> critics;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["env_step"] = env_step;
    j["actor_updates"] = actor_updates;
    j["rng"] = {{"env", env_rng},
                {"behavior", behavior_rng},
                {"gossip", gossip_rng}};
    j["env_state"] = vector_to_json(env_state);
    nlohmann::json agents = nlohmann::json::array();
    for (std::size_t i = 0; i < ensemble.params.size(); ++i) {
      nlohmann::json a;
      a["theta"] = matrix_to_json(ensemble.params[i].theta);
      a["w"] = vector_to_json(critics[i].w);
      a["v"] = vector_to_json(critics[i].v);
      a["u"] = vector_to_json(critics[i].u);
      a["critic_steps"] = critics[i].step_count;
      agents.push_back(a);
    }
    j["agents"] = agents;
    return j;
  }

  static Checkpoint from_json(const nlohmann::json& j) {
    Checkpoint cp;
    cp.env_step = j.at("env_step").get<long>();
    cp.actor_updates = j.at("actor_updates").get<long>();
    cp.env_rng = j.at("rng").at("env").get<std::string>();
    cp.behavior_rng = j.at("rng").at("behavior").get<std::string>();
    cp.gossip_rng = j.at("rng").at("gossip").get<std::string>();
    cp.env_state = vector_from_json(j.at("env_state"));
    int agent_id = 0;
    for (const auto& a : j.at("agents")) {
      cp.ensemble.params.emplace_back(matrix_from_json(a.at("theta")),
                                      agent_id++);
      CriticState c;
      c.w = vector_from_json(a.at("w"));
      c.v = vector_from_json(a.at("v"));
      c.u = vector_from_json(a.at("u"));
      c.step_count = a.at("critic_steps").get<long>();
      cp.critics.push_back(std::move(c));
    }
    return cp;
  }
};

inline nlohmann::json feature_map_to_json(const RbfFeatureMap& map) {
  nlohmann::json j;
  j["state_dim"] = map.state_dim();
  j["n_centers"] = map.size();
  j["centers"] = matrix_to_json(map.centers());
  j["widths"] = vector_to_json(map.widths());
  return j;
}

inline RbfFeatureMap feature_map_from_json(const nlohmann::json& j) {
  return RbfFeatureMap(matrix_from_json(j.at("centers")),
                       vector_from_json(j.at("widths")));
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open for reading: " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

}  // namespace dac
