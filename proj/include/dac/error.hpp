#pragma once

#include <stdexcept>
#include <string>

namespace dac {

// Violated operation precondition (shape mismatch, bad argument range).
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Rejected run configuration, including assumption pre-flight failures.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite parameters produced while training. Carries the agent and the
// environment-step index of the offending transition.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& what, int agent, long step)
      : std::runtime_error(what + " (agent " + std::to_string(agent) +
                           ", step " + std::to_string(step) + ")"),
        agent_id(agent),
        step_index(step) {}
  int agent_id;
  long step_index;
};

struct PoisonedCritic : DivergenceError {
  using DivergenceError::DivergenceError;
};

struct PoisonedActor : DivergenceError {
  using DivergenceError::DivergenceError;
};

// Singular linear system in an enumeration oracle.
struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace dac
