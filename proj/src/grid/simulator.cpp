#include "uvls/grid/simulator.hpp"

#include <algorithm>
#include <numbers>
#include <ostream>

namespace uvls::grid {

void validate(const EventSchedule& events, const NetworkCase& net) {
  if (events.fault) {
    const auto& f = *events.fault;
    if (f.branch >= net.branches.size()) throw GridError("fault references unknown branch");
    const auto& br = net.branches[f.branch];
    if (!br.in_service) throw GridError("fault on an out-of-service branch");
    if (f.bus != br.from_bus && f.bus != br.to_bus) throw GridError("fault bus not on faulted branch");
    if (!(f.apply_time < f.clear_time)) throw GridError("fault must be applied before it clears");
    if (f.apply_time < 0.0) throw GridError("fault apply time must be non-negative");
  }
  double last = -1.0;
  for (const auto& s : events.sheds) {
    if (s.fraction < 0.0 || s.fraction > 1.0) throw GridError("shed fraction outside [0, 1]");
    if (s.time < last) throw GridError("shed events are not time-ordered");
    last = s.time;
    if (std::find(net.controlled_buses.begin(), net.controlled_buses.end(), s.bus) ==
        net.controlled_buses.end()) {
      throw GridError("shed event on non-controlled bus " + std::to_string(s.bus));
    }
  }
}

LoadBook::LoadBook(const NetworkCase& net, const std::vector<Complex>& pf_voltage)
    : controlled_(net.controlled_buses) {
  for (const auto& l : net.loads) {
    LoadRecord r;
    r.bus = l.bus;
    r.p_initial = l.active_power;
    r.q_initial = l.reactive_power;
    const double vm2 = std::norm(pf_voltage[net.bus_index(l.bus)]);
    r.admittance_initial = Complex{l.active_power, -l.reactive_power} / vm2;
    records_.push_back(r);
  }
}

double LoadBook::apply_load_shed(int bus, double fraction) {
  if (fraction < 0.0 || fraction > 1.0) throw GridError("shed fraction outside [0, 1]");
  if (std::find(controlled_.begin(), controlled_.end(), bus) == controlled_.end()) {
    throw GridError("bus " + std::to_string(bus) + " is not controllable");
  }
  double removed = 0.0;
  for (auto& r : records_) {
    if (r.bus != bus) continue;
    const double before = r.active_power();
    r.scale *= 1.0 - fraction;
    removed += before - r.active_power();
  }
  return removed;
}

double LoadBook::active_power(int bus) const {
  double p = 0.0;
  for (const auto& r : records_) {
    if (r.bus == bus) p += r.active_power();
  }
  return p;
}

double LoadBook::cumulative_shed(int bus) const {
  double p = 0.0;
  for (const auto& r : records_) {
    if (r.bus == bus) p += r.p_initial - r.active_power();
  }
  return p;
}

double LoadBook::controllable_initial() const {
  double p = 0.0;
  for (const auto& r : records_) {
    if (std::find(controlled_.begin(), controlled_.end(), r.bus) != controlled_.end()) p += r.p_initial;
  }
  return p;
}

double LoadBook::controllable_remaining() const {
  double p = 0.0;
  for (int bus : controlled_) p += active_power(bus);
  return p;
}

std::vector<Complex> LoadBook::bus_admittance(const NetworkCase& net) const {
  std::vector<Complex> y(net.buses.size(), Complex{0.0, 0.0});
  for (const auto& r : records_) y[net.bus_index(r.bus)] += r.admittance_initial * r.scale;
  return y;
}

Simulator::Simulator(NetworkCase net, IntegratorConfig config, PowerFlowOptions pf_options)
    : net_(std::move(net)),
      config_(config),
      pf_(solve_power_flow(net_, pf_options)),
      loads_(net_, pf_.voltage) {
  validate(config_);
  auto init = init_dynamic_state(net_, pf_);
  refs_ = std::move(init.refs);
  fixed_voltage_ = std::move(init.fixed_voltage);
  state_ = std::move(init.state);
  rebuild_network();
}

void Simulator::rebuild_network() {
  YbusOptions opts;
  opts.fault = fault_;
  opts.tripped_branches = tripped_;
  opts.load_admittance = loads_.bus_admittance(net_);
  system_.reset();
  system_.emplace(DynamicSystem{&net_, refs_, NetworkSolver(net_, build_ybus(net_, opts), fixed_voltage_),
                                2.0 * std::numbers::pi * net_.frequency});
  // Algebraic variables jump to the new network; machine states are continuous.
  state_.bus_voltages = system_->network.solve(net_.machines, state_.machines, state_.t);
}

void Simulator::apply_fault(const FaultOverlay& fault) {
  fault_ = fault;
  rebuild_network();
}

void Simulator::clear_fault(bool trip_branch) {
  if (!fault_) return;
  if (trip_branch) tripped_.push_back(fault_->branch);
  fault_.reset();
  rebuild_network();
}

double Simulator::apply_load_shed(int bus, double fraction) {
  const double removed = loads_.apply_load_shed(bus, fraction);
  if (fraction > 0.0) rebuild_network();
  return removed;
}

void Simulator::advance(std::size_t steps, const Probe& probe) {
  for (std::size_t k = 0; k < steps; ++k) {
    state_ = step(state_, *system_, config_);
    ++step_;
    state_.t = static_cast<double>(step_) * config_.step;
    if (probe) probe(state_);
  }
}

std::vector<double> Simulator::voltage_magnitudes(const std::vector<int>& bus_ids) const {
  std::vector<double> out;
  out.reserve(bus_ids.size());
  for (int id : bus_ids) out.push_back(std::abs(state_.bus_voltages[net_.bus_index(id)]));
  return out;
}

Trajectory simulate_horizon(const NetworkCase& net, const EventSchedule& events,
                            const IntegratorConfig& config, const Probe& probe) {
  validate(events, net);
  Simulator sim(net, config);
  const auto total = steps_for(config.horizon, config.step);
  std::optional<std::size_t> k_apply, k_clear;
  if (events.fault) {
    k_apply = step_index(events.fault->apply_time, config.step);
    k_clear = std::max(step_index(events.fault->clear_time, config.step), *k_apply + 1);
  }

  Trajectory traj;
  traj.reserve(total + 1);
  std::size_t next_shed = 0;
  for (std::size_t k = 0;; ++k) {
    if (k_apply && k == *k_apply) {
      sim.apply_fault({events.fault->branch, events.fault->bus, kBoltedFaultConductance});
    }
    if (k_clear && k == *k_clear) sim.clear_fault(events.fault->trip_on_clear);
    while (next_shed < events.sheds.size() &&
           step_index(events.sheds[next_shed].time, config.step) <= k) {
      sim.apply_load_shed(events.sheds[next_shed].bus, events.sheds[next_shed].fraction);
      ++next_shed;
    }
    if (probe) probe(sim.state());
    traj.push_back(sim.state());
    if (k == total) break;
    sim.advance(1);
  }
  return traj;
}

void write_trajectory_csv(std::ostream& out, const NetworkCase& net, const Trajectory& traj,
                          const std::vector<int>& bus_ids) {
  out << 't';
  for (int id : bus_ids) out << ",bus_" << id << "_vm";
  out << '\n';
  std::vector<std::size_t> pos;
  for (int id : bus_ids) pos.push_back(net.bus_index(id));
  out.precision(10);
  for (const auto& s : traj) {
    out << s.t;
    for (auto p : pos) out << ',' << std::abs(s.bus_voltages[p]);
    out << '\n';
  }
}

}  // namespace uvls::grid
