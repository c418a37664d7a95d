#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "uvls/grid/dynamics.hpp"

namespace uvls::grid {

struct FaultEvent {
  std::size_t branch = 0;
  int bus = 0;  // near-end bus
  double apply_time = 0.0;
  double clear_time = 0.0;  // T_fc
  bool trip_on_clear = false;
};

struct ShedEvent {
  double time = 0.0;
  int bus = 0;
  double fraction = 0.0;  // of the current load
};

struct EventSchedule {
  std::optional<FaultEvent> fault;
  std::vector<ShedEvent> sheds;
};

void validate(const EventSchedule& events, const NetworkCase& net);

struct LoadRecord {
  int bus = 0;
  double p_initial = 0.0;
  double q_initial = 0.0;
  Complex admittance_initial{0.0, 0.0};
  double scale = 1.0;  // remaining fraction of the initial load

  double active_power() const { return p_initial * scale; }
  double reactive_power() const { return q_initial * scale; }
};

// Load bookkeeping for shedding. Loads are constant impedance; shedding a
// fraction f scales the bus's P, Q and admittance by (1 - f).
class LoadBook {
 public:
  LoadBook(const NetworkCase& net, const std::vector<Complex>& pf_voltage);

  // Returns the active power removed. Requires `bus` in the controlled set
  // and fraction in [0, 1].
  double apply_load_shed(int bus, double fraction);

  double active_power(int bus) const;
  double cumulative_shed(int bus) const;
  double controllable_initial() const;
  double controllable_remaining() const;
  std::vector<Complex> bus_admittance(const NetworkCase& net) const;
  const std::vector<LoadRecord>& records() const { return records_; }

 private:
  std::vector<LoadRecord> records_;
  std::vector<int> controlled_;
};

using Probe = std::function<void(const DynamicState&)>;

// Stateful time-domain simulation of one case: power flow, equilibrium
// initialization, then integration with network switching and shedding.
class Simulator {
 public:
  explicit Simulator(NetworkCase net, IntegratorConfig config = {},
                     PowerFlowOptions pf_options = {});
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  const NetworkCase& network() const { return net_; }
  const IntegratorConfig& config() const { return config_; }
  const PowerFlowSolution& power_flow() const { return pf_; }
  const DynamicState& state() const { return state_; }
  const std::vector<ControlReferences>& references() const { return refs_; }
  const LoadBook& loads() const { return loads_; }
  std::size_t step_count() const { return step_; }
  double time() const { return state_.t; }
  bool fault_active() const { return fault_.has_value(); }

  void apply_fault(const FaultOverlay& fault);
  void clear_fault(bool trip_branch);
  double apply_load_shed(int bus, double fraction);

  // Integrates `steps` steps, calling `probe` after each accepted step.
  void advance(std::size_t steps, const Probe& probe = {});

  std::vector<double> voltage_magnitudes(const std::vector<int>& bus_ids) const;

 private:
  void rebuild_network();

  NetworkCase net_;
  IntegratorConfig config_;
  PowerFlowSolution pf_;
  std::vector<ControlReferences> refs_;
  std::vector<Complex> fixed_voltage_;
  LoadBook loads_;
  DynamicState state_;
  std::optional<FaultOverlay> fault_;
  std::vector<std::size_t> tripped_;
  std::optional<DynamicSystem> system_;
  std::size_t step_ = 0;
};

using Trajectory = std::vector<DynamicState>;

// Runs the whole horizon with events applied on the nearest step boundary;
// one state per step including t = 0. Propagates VoltageCollapse.
Trajectory simulate_horizon(const NetworkCase& net, const EventSchedule& events,
                            const IntegratorConfig& config, const Probe& probe = {});

// CSV with header `t,bus_<id>_vm,...`, one row per state.
void write_trajectory_csv(std::ostream& out, const NetworkCase& net, const Trajectory& traj,
                          const std::vector<int>& bus_ids);

}  // namespace uvls::grid
