#include "uvls/relay/relay.hpp"

#include <deque>
#include <stdexcept>

namespace uvls::relay {

namespace {
constexpr double kTimeSlack = 1e-9;
}

void validate(const RelayConfig& c, bool mdp_compatible) {
  if (c.stages.empty()) throw std::invalid_argument("relay needs at least one stage");
  for (std::size_t s = 0; s < c.stages.size(); ++s) {
    const auto& st = c.stages[s];
    if (!(st.delay > 0.0)) throw std::invalid_argument("relay stage delay must be positive");
    if (!(st.fraction > 0.0 && st.fraction <= 1.0)) {
      throw std::invalid_argument("relay shed fraction must be in (0, 1]");
    }
    if (s > 0 && st.threshold > c.stages[s - 1].threshold) {
      throw std::invalid_argument("relay thresholds must be nonincreasing across stages");
    }
    if (mdp_compatible && st.fraction != env::kShedStep) {
      throw std::invalid_argument("relay shed fraction must equal the action step 0.1");
    }
  }
  if (c.rearm < 0.0) throw std::invalid_argument("relay re-arm time must be non-negative");
}

RelayConfig relay_config_from_json(const nlohmann::json& j) {
  RelayConfig c;
  if (auto it = j.find("stages"); it != j.end()) {
    c.stages.clear();
    for (const auto& s : *it) {
      c.stages.push_back({s.at("threshold").get<double>(), s.at("delay").get<double>(),
                          s.value("fraction", env::kShedStep)});
    }
  }
  c.rearm = j.value("rearm", c.rearm);
  return c;
}

nlohmann::json to_json(const RelayConfig& c) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : c.stages) {
    stages.push_back({{"threshold", s.threshold}, {"delay", s.delay}, {"fraction", s.fraction}});
  }
  return {{"stages", stages}, {"rearm", c.rearm}};
}

RelayState initial_relay_state(const RelayConfig& config, std::size_t n_monitored) {
  RelayState s;
  s.below_since.assign(config.stages.size(), std::vector<std::optional<double>>(n_monitored));
  return s;
}

RelayDecision relay_policy(std::span<const env::VoltageSample> history, double t,
                           const RelayState& state, const RelayConfig& config,
                           std::size_t n_controlled) {
  RelayDecision d{env::no_op_action(), state};
  auto& timers = d.state.below_since;
  for (const auto& sample : history) {
    for (std::size_t s = 0; s < config.stages.size(); ++s) {
      for (std::size_t j = 0; j < sample.magnitudes.size() && j < timers[s].size(); ++j) {
        if (sample.magnitudes[j] < config.stages[s].threshold) {
          if (!timers[s][j]) timers[s][j] = sample.t;
        } else {
          timers[s][j].reset();
        }
      }
    }
  }

  const bool armed = !d.state.last_shed || t - *d.state.last_shed >= config.rearm - kTimeSlack;
  if (!armed) return d;
  for (std::size_t s = 0; s < config.stages.size(); ++s) {
    for (const auto& since : timers[s]) {
      if (since && t - *since >= config.stages[s].delay - kTimeSlack) {
        d.action = env::all_shed_action(n_controlled);
        d.state.last_shed = t;
        return d;
      }
    }
  }
  return d;
}

RelayAgent::RelayAgent(RelayConfig config) : config_(std::move(config)) { validate(config_); }

env::ActionIndex RelayAgent::operator()(const env::Environment& env, const env::StackedState&) {
  if (!state_) state_ = initial_relay_state(config_, env.n_monitored());
  auto d = relay_policy(env.recent_voltages(), env.time(), *state_, config_, env.n_controlled());
  state_ = std::move(d.state);
  return d.action;
}

ExpertRun generate_expert_transitions(env::Environment& env,
                                      std::span<const env::ScenarioSpec> scenarios,
                                      const RelayConfig& config, std::size_t capacity) {
  validate(config);
  ExpertRun run;
  std::deque<learn::Transition> kept;
  for (const auto& spec : scenarios) {
    RelayAgent agent(config);
    env::StackedState s;
    try {
      s = env.reset(spec);
    } catch (const env::ScenarioRejected&) {
      run.rejected.push_back(spec.id);
      continue;
    }
    auto flat = s.flatten();
    while (!env.terminal()) {
      const auto a = agent(env, s);
      auto res = env.step(a);
      auto next = res.state.flatten();
      kept.push_back({flat, a, res.reward, next, res.terminal, learn::Origin::kExpert});
      if (kept.size() > capacity) kept.pop_front();
      s = std::move(res.state);
      flat = std::move(next);
    }
    run.episodes.push_back(env.result());
  }
  run.transitions.assign(kept.begin(), kept.end());
  return run;
}

}  // namespace uvls::relay
