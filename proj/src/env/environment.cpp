#include "uvls/env/environment.hpp"

#include <cmath>
#include <ostream>

namespace uvls::env {

void validate(const EnvConfig& c) {
  grid::validate(c.integrator);
  if (!(c.action_interval > 0.0)) throw UsageError("action interval must be positive");
  if (!(c.horizon > 0.0)) throw UsageError("horizon must be positive");
  if (c.stack_depth == 0) throw UsageError("stack depth must be at least 1");
  grid::steps_for(c.action_interval, c.integrator.step);
  grid::steps_for(c.horizon, c.integrator.step);
}

StackedState::StackedState(std::size_t depth, const Observation& initial)
    : frames_(depth, initial) {}

void StackedState::push(const Observation& obs) {
  frames_.pop_front();
  frames_.push_back(obs);
}

std::vector<double> StackedState::flatten() const {
  std::vector<double> out;
  for (const auto& f : frames_) out.insert(out.end(), f.deltas.begin(), f.deltas.end());
  return out;
}

Environment::Environment(grid::NetworkCase net, EnvConfig config)
    : net_(std::move(net)), config_(std::move(config)) {
  grid::validate(net_);
  validate(config_);
  if (net_.controlled_buses.empty()) throw UsageError("case has no controlled buses");
  if (net_.monitored_buses.empty()) throw UsageError("case has no monitored buses");
  config_.integrator.horizon = config_.horizon;
  interval_steps_ = grid::steps_for(config_.action_interval, config_.integrator.step);
  horizon_steps_ = grid::steps_for(config_.horizon, config_.integrator.step);
}

double Environment::time() const { return sim_ ? sim_->time() : 0.0; }

std::size_t Environment::action_instants() const {
  if (first_action_step_ >= horizon_steps_) return 0;
  return (horizon_steps_ - first_action_step_ + interval_steps_ - 1) / interval_steps_;
}

void Environment::advance_to(std::size_t target) {
  const double h = config_.integrator.step;
  while (sim_->step_count() < target) {
    const std::size_t k = sim_->step_count();
    if (apply_step_ && k == *apply_step_) {
      const auto& br = net_.branches[*scenario_.fault_branch];
      sim_->apply_fault({*scenario_.fault_branch, br.from_bus, grid::kBoltedFaultConductance});
    }
    if (apply_step_ && k == clear_step_) sim_->clear_fault(config_.trip_faulted_branch);
    sim_->advance(1);
    VoltageSample s{static_cast<double>(sim_->step_count()) * h,
                    sim_->voltage_magnitudes(net_.monitored_buses)};
    if (record_trajectory_) trajectory_.push_back(s);
    recent_.push_back(std::move(s));
  }
}

StackedState Environment::reset(const ScenarioSpec& scenario) {
  if (!(scenario.load_scale > 0.0) || !std::isfinite(scenario.load_scale)) {
    throw ScenarioError("load_scale must be positive");
  }
  if (scenario.fault_branch) {
    if (*scenario.fault_branch >= net_.branches.size() ||
        !net_.branches[*scenario.fault_branch].in_service) {
      throw ScenarioError("fault branch does not exist");
    }
    if (!(scenario.fault_duration > 0.0) || scenario.fault_apply_time < 0.0) {
      throw ScenarioError("fault timing is invalid");
    }
  }

  grid::NetworkCase scaled = net_;
  for (auto& l : scaled.loads) {
    l.active_power *= scenario.load_scale;
    l.reactive_power *= scenario.load_scale;
  }
  for (auto& m : scaled.machines) m.p_dispatch *= scenario.load_scale;

  sim_.reset();
  terminal_ = true;
  try {
    sim_ = std::make_unique<grid::Simulator>(std::move(scaled), config_.integrator);
  } catch (const grid::PowerFlowDivergence& e) {
    throw ScenarioRejected("scenario " + std::to_string(scenario.id) + ": " + e.what());
  } catch (const grid::InitializationError& e) {
    throw ScenarioRejected("scenario " + std::to_string(scenario.id) + ": " + e.what());
  }

  scenario_ = scenario;
  steps_.clear();
  trajectory_.clear();
  recent_.clear();
  collapsed_ = false;
  const double h = config_.integrator.step;
  if (scenario.fault_branch) {
    apply_step_ = grid::step_index(scenario.fault_apply_time, h);
    clear_step_ = std::max(grid::step_index(scenario.fault_apply_time + scenario.fault_duration, h),
                           *apply_step_ + 1);
  } else {
    apply_step_.reset();
    clear_step_ = 0;
  }
  t_clear_ = static_cast<double>(clear_step_) * h;
  first_action_step_ = (clear_step_ + interval_steps_ - 1) / interval_steps_ * interval_steps_;
  initial_controllable_ = sim_->loads().controllable_initial();

  if (record_trajectory_) {
    trajectory_.push_back({0.0, sim_->voltage_magnitudes(net_.monitored_buses)});
  }
  recent_.push_back({0.0, sim_->voltage_magnitudes(net_.monitored_buses)});
  try {
    advance_to(first_action_step_);
  } catch (const grid::VoltageCollapse& e) {
    sim_.reset();
    throw ScenarioRejected("scenario " + std::to_string(scenario.id) +
                           " collapsed before the first action instant: " + e.what());
  }
  if (action_instants() == 0) throw ScenarioRejected("no action instant inside the horizon");

  const auto vm = sim_->voltage_magnitudes(net_.monitored_buses);
  stack_ = StackedState(config_.stack_depth, compute_deltas(vm, sim_->time(), t_clear_, config_.envelope));
  terminal_ = false;
  return stack_;
}

StepResult Environment::step(ActionIndex action) {
  if (terminal_ || !sim_) throw UsageError("step() on a terminated episode; call reset()");
  const auto& controlled = net_.controlled_buses;
  const auto u = decode_action(action, controlled.size());

  StepRecord rec;
  rec.t = sim_->time();
  rec.action = action;

  LoadAccounting acc;
  acc.initial_total = initial_controllable_;
  for (std::size_t i = 0; i < controlled.size(); ++i) {
    acc.before_action.push_back(sim_->loads().active_power(controlled[i]));
    acc.shed.push_back(u[i] > 0.0 ? sim_->apply_load_shed(controlled[i], u[i]) : 0.0);
  }
  rec.remaining_load_pct = remaining_load_percent(acc);

  recent_.clear();
  const std::size_t target = sim_->step_count() + interval_steps_;
  Observation obs;
  try {
    advance_to(target);
    const auto vm = sim_->voltage_magnitudes(net_.monitored_buses);
    obs = compute_deltas(vm, sim_->time(), t_clear_, config_.envelope);
    rec.reward = reward(obs, acc);
  } catch (const grid::VoltageCollapse& e) {
    obs.t = e.time();
    obs.deltas.assign(net_.monitored_buses.size(), -1.0);
    rec.reward = collapse_reward(net_.monitored_buses.size());
    rec.collapsed = true;
    collapsed_ = true;
  }
  rec.min_delta = obs.min_delta();
  stack_.push(obs);
  steps_.push_back(rec);

  terminal_ = collapsed_ || target >= horizon_steps_;
  return {stack_, rec.reward, terminal_};
}

EpisodeResult Environment::result() const {
  EpisodeResult r;
  r.scenario_id = scenario_.id;
  r.steps = steps_;
  r.collapsed = collapsed_;
  std::vector<StepViolation> log;
  for (const auto& s : steps_) {
    r.total_reward += s.reward;
    log.push_back({s.min_delta, s.collapsed});
  }
  r.success = success_flag(log);
  r.final_remaining_load_pct = steps_.empty() ? 100.0 : steps_.back().remaining_load_pct;
  r.trajectory = trajectory_;
  return r;
}

EpisodeResult run_episode(Environment& env, const ScenarioSpec& scenario, const Policy& policy) {
  auto state = env.reset(scenario);
  while (!env.terminal()) state = env.step(policy(env, state)).state;
  return env.result();
}

void write_episode_csv(std::ostream& out, const EpisodeResult& episode) {
  out << "t,action_index,r_t,min_delta,remaining_load_pct\n";
  out.precision(17);
  for (const auto& s : episode.steps) {
    out << s.t << ',' << s.action.index << ',' << s.reward << ',' << s.min_delta << ','
        << s.remaining_load_pct << '\n';
  }
}

void write_voltage_csv(std::ostream& out, const grid::NetworkCase& net, const EpisodeResult& episode,
                       double t_clear, const TvrcEnvelope& envelope) {
  out << 't';
  for (int id : net.monitored_buses) out << ",bus_" << id << "_vm";
  out << ",tvrc\n";
  out.precision(17);
  for (const auto& s : episode.trajectory) {
    out << s.t;
    for (double v : s.magnitudes) out << ',' << v;
    out << ',' << envelope.threshold(s.t - t_clear) << '\n';
  }
}

}  // namespace uvls::env
