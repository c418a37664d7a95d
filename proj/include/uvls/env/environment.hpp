#pragma once

#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "uvls/env/mdp.hpp"
#include "uvls/env/scenario.hpp"
#include "uvls/env/tvrc.hpp"
#include "uvls/grid/simulator.hpp"

namespace uvls::env {

struct EnvConfig {
  double action_interval = 1.0;  // T_m, s
  double horizon = 15.0;         // T, s
  std::size_t stack_depth = 10;  // N_r
  bool trip_faulted_branch = true;
  grid::IntegratorConfig integrator;
  TvrcEnvelope envelope;
};

void validate(const EnvConfig& config);

// The N_r most recent observations, oldest first.
class StackedState {
 public:
  StackedState() = default;
  StackedState(std::size_t depth, const Observation& initial);

  void push(const Observation& obs);
  const std::deque<Observation>& frames() const { return frames_; }
  std::vector<double> flatten() const;
  std::size_t depth() const { return frames_.size(); }

 private:
  std::deque<Observation> frames_;
};

struct VoltageSample {
  double t = 0.0;
  std::vector<double> magnitudes;  // monitored buses
};

struct StepRecord {
  double t = 0.0;  // action instant
  ActionIndex action;
  double reward = 0.0;
  double min_delta = 0.0;  // of the observation that followed the action
  double remaining_load_pct = 100.0;
  bool collapsed = false;
};

struct EpisodeResult {
  std::uint64_t scenario_id = 0;
  double total_reward = 0.0;  // R_k
  int success = 0;            // alpha_k
  std::vector<StepRecord> steps;
  double final_remaining_load_pct = 100.0;
  bool collapsed = false;
  std::vector<VoltageSample> trajectory;  // filled when recording is on
};

struct StepResult {
  StackedState state;
  double reward = 0.0;
  bool terminal = false;
};

class ScenarioRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// MDP wrapper around the transient simulator. One instance runs one episode
// at a time; reset() starts a new one.
class Environment {
 public:
  Environment(grid::NetworkCase net, EnvConfig config = {});

  // Scales loads and dispatch, solves the power flow, initializes dynamics
  // and simulates through the fault up to the first action instant. Throws
  // ScenarioRejected when the pre-fault operating point does not exist.
  StackedState reset(const ScenarioSpec& scenario);

  StepResult step(ActionIndex action);

  bool terminal() const { return terminal_; }
  double time() const;
  double clearing_time() const { return t_clear_; }
  std::size_t n_controlled() const { return net_.controlled_buses.size(); }
  std::size_t n_monitored() const { return net_.monitored_buses.size(); }
  std::size_t state_size() const { return config_.stack_depth * n_monitored(); }
  std::uint32_t n_actions() const { return action_count(n_controlled()); }
  const StackedState& state() const { return stack_; }
  const grid::NetworkCase& network() const { return net_; }
  const EnvConfig& config() const { return config_; }

  // Per-step monitored voltage samples produced since the previous reset/step.
  const std::vector<VoltageSample>& recent_voltages() const { return recent_; }

  // Episode summary so far (final once terminal).
  EpisodeResult result() const;

  void set_record_trajectory(bool on) { record_trajectory_ = on; }

  // Number of action instants in a full episode for the current scenario.
  std::size_t action_instants() const;

 private:
  void advance_to(std::size_t step_index);

  grid::NetworkCase net_;
  EnvConfig config_;
  std::unique_ptr<grid::Simulator> sim_;
  StackedState stack_;
  ScenarioSpec scenario_;
  double t_clear_ = 0.0;
  std::size_t clear_step_ = 0;
  std::optional<std::size_t> apply_step_;
  std::size_t first_action_step_ = 0;
  std::size_t horizon_steps_ = 0;
  std::size_t interval_steps_ = 0;
  double initial_controllable_ = 0.0;
  bool terminal_ = true;
  bool collapsed_ = false;
  bool record_trajectory_ = false;
  std::vector<VoltageSample> recent_;
  std::vector<StepRecord> steps_;
  std::vector<VoltageSample> trajectory_;
};

using Policy = std::function<ActionIndex(const Environment&, const StackedState&)>;

// Resets and rolls out a full episode with `policy`.
EpisodeResult run_episode(Environment& env, const ScenarioSpec& scenario, const Policy& policy);

// CSV `t,action_index,r_t,min_delta,remaining_load_pct`.
void write_episode_csv(std::ostream& out, const EpisodeResult& episode);

// CSV `t,bus_<id>_vm,...,tvrc` of the recorded monitored trajectory.
void write_voltage_csv(std::ostream& out, const grid::NetworkCase& net, const EpisodeResult& episode,
                       double t_clear, const TvrcEnvelope& envelope = {});

}  // namespace uvls::env
