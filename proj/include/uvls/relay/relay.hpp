#pragma once

#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "uvls/env/environment.hpp"
#include "uvls/learn/transition.hpp"

namespace uvls::relay {

struct RelayStage {
  double threshold = 0.90;  // p.u.
  double delay = 0.5;       // s
  double fraction = 0.1;    // shed per controlled bus
};

struct RelayConfig {
  std::vector<RelayStage> stages{RelayStage{}};
  double rearm = 1.0;  // s between successive sheds
};

// Throws std::invalid_argument on an inconsistent stage table. With
// `mdp_compatible`, every fraction must equal the action space's shed step.
void validate(const RelayConfig& config, bool mdp_compatible = true);

RelayConfig relay_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RelayConfig& config);

// Timers carried between calls. below_since[s][j]: time bus j went below
// stage s's threshold, empty while above.
struct RelayState {
  std::vector<std::vector<std::optional<double>>> below_since;
  std::optional<double> last_shed;
};

RelayState initial_relay_state(const RelayConfig& config, std::size_t n_monitored);

struct RelayDecision {
  env::ActionIndex action;
  RelayState state;
};

// Consumes the voltage samples since the previous call (time ordered), then
// decides at time `t`.
RelayDecision relay_policy(std::span<const env::VoltageSample> history, double t,
                           const RelayState& state, const RelayConfig& config,
                           std::size_t n_controlled);

// Environment-driven policy closure with its own timer state.
class RelayAgent {
 public:
  explicit RelayAgent(RelayConfig config = {});
  env::ActionIndex operator()(const env::Environment& env, const env::StackedState& state);
  void reset() { state_.reset(); }

 private:
  RelayConfig config_;
  std::optional<RelayState> state_;
};

struct ExpertRun {
  std::vector<learn::Transition> transitions;  // capped, oldest dropped
  std::vector<env::EpisodeResult> episodes;
  std::vector<std::uint64_t> rejected;  // scenario ids skipped
};

inline constexpr std::size_t kExpertCapacity = 2000;

ExpertRun generate_expert_transitions(env::Environment& env,
                                      std::span<const env::ScenarioSpec> scenarios,
                                      const RelayConfig& config,
                                      std::size_t capacity = kExpertCapacity);

}  // namespace uvls::relay
