#include "uvls/grid/dynamics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace uvls::grid {

Eigen::VectorXd DynamicState::pack() const {
  Eigen::VectorXd x(machines.size() * kMachineStateSize);
  for (std::size_t m = 0; m < machines.size(); ++m) {
    machines[m].store(x.data() + m * kMachineStateSize);
  }
  return x;
}

void DynamicState::unpack(const Eigen::VectorXd& x) {
  for (std::size_t m = 0; m < machines.size(); ++m) {
    machines[m] = MachineState::load(x.data() + m * kMachineStateSize);
  }
}

namespace {

bool is_fixed(Complex v) { return !std::isnan(v.real()); }

Complex norton_admittance(const MachineModel& m) {
  return 1.0 / Complex{0.0, 0.5 * (m.xd_prime + m.xq_prime)};
}

}  // namespace

std::vector<Complex> fixed_voltages(const NetworkCase& net, const std::vector<Complex>& pf_voltage) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<Complex> out(net.buses.size(), Complex{nan, nan});
  const auto machine_pos = machine_at_bus(net);
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    if (net.buses[i].type == BusType::kSlack && machine_pos[i] < 0) out[i] = pf_voltage[i];
  }
  return out;
}

NetworkSolver::NetworkSolver(const NetworkCase& net, const AdmittanceMatrix& ybus,
                             const std::vector<Complex>& fixed_voltage)
    : nbus_(net.buses.size()) {
  if (fixed_voltage.size() != nbus_) throw GridError("fixed voltage vector size mismatch");
  Eigen::MatrixXcd y = ybus.complex();
  for (const auto& m : net.machines) {
    const auto pos = net.bus_index(m.bus);
    machine_pos_.push_back(pos);
    norton_.push_back(norton_admittance(m));
    y(pos, pos) += norton_.back();
  }

  free_index_.assign(nbus_, -1);
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < nbus_; ++i) {
    if (is_fixed(fixed_voltage[i])) {
      fixed_.emplace_back(i, fixed_voltage[i]);
    } else {
      free_index_[i] = static_cast<long>(free.size());
      free.push_back(i);
    }
  }
  const auto nf = free.size();
  Eigen::MatrixXcd yff(nf, nf);
  for (std::size_t r = 0; r < nf; ++r) {
    for (std::size_t c = 0; c < nf; ++c) yff(r, c) = y(free[r], free[c]);
  }
  Eigen::VectorXcd inj_fixed = Eigen::VectorXcd::Zero(nf);
  for (const auto& [pos, v] : fixed_) {
    for (std::size_t r = 0; r < nf; ++r) inj_fixed(r) -= y(free[r], pos) * v;
  }

  Eigen::FullPivLU<Eigen::MatrixXcd> lu(yff);
  if (nf > 0 && !lu.isInvertible()) {
    singular_ = true;
    return;
  }
  Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(nf, machine_pos_.size());
  for (std::size_t m = 0; m < machine_pos_.size(); ++m) e(free_index_[machine_pos_[m]], m) = 1.0;
  z_ = nf > 0 ? Eigen::MatrixXcd(lu.solve(e)) : Eigen::MatrixXcd(0, machine_pos_.size());
  w_ = nf > 0 ? Eigen::VectorXcd(lu.solve(inj_fixed)) : Eigen::VectorXcd(0);
}

std::vector<Complex> NetworkSolver::solve(const std::vector<MachineModel>& machines,
                                          const std::vector<MachineState>& states, double t) const {
  if (singular_) throw VoltageCollapse("network admittance matrix is singular", t);
  const auto nm = machines.size();

  Eigen::VectorXcd j = Eigen::VectorXcd::Zero(static_cast<long>(nm));
  if (nm > 0) {
    // Machine Norton currents J satisfy J = A' V_m + c with V_m = Z_mm J + w_m.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * nm, 2 * nm);
    Eigen::VectorXd c(2 * nm);
    Eigen::MatrixXd zmm(2 * nm, 2 * nm);
    Eigen::VectorXd wm(2 * nm);
    for (std::size_t m = 0; m < nm; ++m) {
      const auto st = stator_model(machines[m], states[m]);
      Eigen::Matrix2d yn;
      yn << norton_[m].real(), -norton_[m].imag(), norton_[m].imag(), norton_[m].real();
      a.block<2, 2>(2 * m, 2 * m) = st.a + yn;
      c.segment<2>(2 * m) = st.c;
      const auto row = free_index_[machine_pos_[m]];
      wm(2 * m) = w_(row).real();
      wm(2 * m + 1) = w_(row).imag();
      for (std::size_t k = 0; k < nm; ++k) {
        const Complex zk = z_(row, static_cast<long>(k));
        zmm(2 * m, 2 * k) = zk.real();
        zmm(2 * m, 2 * k + 1) = -zk.imag();
        zmm(2 * m + 1, 2 * k) = zk.imag();
        zmm(2 * m + 1, 2 * k + 1) = zk.real();
      }
    }
    const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(2 * nm, 2 * nm) - a * zmm;
    const Eigen::VectorXd rhs = a * wm + c;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite() || (lhs * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-6 * (1.0 + rhs.norm())) {
      throw VoltageCollapse("machine-network algebraic solve diverged", t);
    }
    for (std::size_t m = 0; m < nm; ++m) j(static_cast<long>(m)) = {sol(2 * m), sol(2 * m + 1)};
  }

  std::vector<Complex> v(nbus_);
  const Eigen::VectorXcd vf = z_ * j + w_;
  for (std::size_t i = 0; i < nbus_; ++i) {
    if (free_index_[i] >= 0) v[i] = vf(free_index_[i]);
  }
  for (const auto& [pos, val] : fixed_) v[pos] = val;
  for (const auto& x : v) {
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) {
      throw VoltageCollapse("non-finite bus voltage", t);
    }
  }
  return v;
}

Initialization init_dynamic_state(const NetworkCase& net, const PowerFlowSolution& pf) {
  Initialization init;
  const auto n = net.buses.size();
  init.load_admittance.assign(n, Complex{0.0, 0.0});
  for (const auto& l : net.loads) {
    const auto i = net.bus_index(l.bus);
    const double vm2 = std::norm(pf.voltage[i]);
    init.load_admittance[i] += Complex{l.active_power, -l.reactive_power} / vm2;
  }
  init.fixed_voltage = fixed_voltages(net, pf.voltage);

  init.state.t = 0.0;
  init.state.machines.resize(net.machines.size());
  init.refs.resize(net.machines.size());
  for (std::size_t m = 0; m < net.machines.size(); ++m) {
    const auto& mc = net.machines[m];
    const Complex v = pf.voltage[net.bus_index(mc.bus)];
    const Complex i = std::conj(pf.machine_power[m] / v);

    // q-axis lies along V + j x_q I.
    const double delta = std::arg(v + Complex{0.0, mc.xq} * i);
    const double s = std::sin(delta), c = std::cos(delta);
    const double vd = v.real() * s - v.imag() * c;
    const double vq = v.real() * c + v.imag() * s;
    const double id = i.real() * s - i.imag() * c;
    const double iq = i.real() * c + i.imag() * s;

    MachineState& st = init.state.machines[m];
    st.delta = delta;
    st.omega = 0.0;
    st.ed_prime = vd - mc.xq_prime * iq;
    st.eq_prime = vq + mc.xd_prime * id;
    st.efd = st.eq_prime + (mc.xd - mc.xd_prime) * id;
    st.pm = (v * std::conj(i)).real();
    st.pss = {0.0, 0.0, 0.0};

    init.refs[m].v_ref = std::abs(v) + st.efd / mc.exciter.gain;
    init.refs[m].p_ref = st.pm;

    if (st.efd < mc.exciter.efd_min || st.efd > mc.exciter.efd_max) {
      std::ostringstream msg;
      msg << "machine " << m << " at bus " << mc.bus << " needs E_fd = " << st.efd
          << " outside exciter limits [" << mc.exciter.efd_min << ", " << mc.exciter.efd_max << "]";
      throw InitializationError(msg.str(), m);
    }
    if (st.pm < mc.governor.pm_min || st.pm > mc.governor.pm_max) {
      std::ostringstream msg;
      msg << "machine " << m << " at bus " << mc.bus << " needs P_m = " << st.pm
          << " outside governor limits [" << mc.governor.pm_min << ", " << mc.governor.pm_max
          << "]";
      throw InitializationError(msg.str(), m);
    }
  }

  YbusOptions opts;
  opts.load_admittance = init.load_admittance;
  const NetworkSolver solver(net, build_ybus(net, opts), init.fixed_voltage);
  init.state.bus_voltages = solver.solve(net.machines, init.state.machines, 0.0);
  return init;
}

Eigen::VectorXd state_derivative(const DynamicState& state, const DynamicSystem& system) {
  const auto& net = *system.net;
  Eigen::VectorXd f(state.machines.size() * kMachineStateSize);
  for (std::size_t m = 0; m < state.machines.size(); ++m) {
    const auto& mc = net.machines[m];
    const Complex v = state.bus_voltages[net.bus_index(mc.bus)];
    machine_derivative(mc, system.refs[m], state.machines[m], v, system.omega_base)
        .store(f.data() + m * kMachineStateSize);
  }
  return f;
}

namespace {

void check_synchronism(const DynamicState& s, const NetworkCase& net, const IntegratorConfig& cfg) {
  if (cfg.max_angle_spread <= 0.0 || s.machines.empty()) return;
  double lo = s.machines.front().delta, hi = lo;
  for (const auto& m : s.machines) {
    lo = std::min(lo, m.delta);
    hi = std::max(hi, m.delta);
  }
  // An infinite bus anchors the reference angle.
  const auto fixed = machine_at_bus(net);
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    if (net.buses[i].type == BusType::kSlack && fixed[i] < 0) {
      const double a = std::arg(s.bus_voltages[i]);
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
  }
  if (hi - lo > cfg.max_angle_spread) {
    throw VoltageCollapse("loss of synchronism: rotor angle spread exceeds limit", s.t);
  }
}

}  // namespace

DynamicState step(const DynamicState& state, const DynamicSystem& system,
                  const IntegratorConfig& config) {
  const auto& net = *system.net;
  const double t_next = state.t + config.step;
  DynamicState trial = state;
  trial.t = t_next;

  auto derivative = [&](const Eigen::VectorXd& x) {
    trial.unpack(x);
    trial.bus_voltages = system.network.solve(net.machines, trial.machines, t_next);
    return state_derivative(trial, system);
  };

  const Eigen::VectorXd x0 = state.pack();
  const Eigen::VectorXd f0 = state_derivative(state, system);
  const Eigen::VectorXd x1 = predictor_corrector_step(x0, f0, config.step, derivative, config);
  if (!x1.allFinite()) throw VoltageCollapse("non-finite machine state", t_next);

  DynamicState next = state;
  next.t = t_next;
  next.unpack(x1);
  for (std::size_t m = 0; m < next.machines.size(); ++m) apply_limits(net.machines[m], next.machines[m]);
  next.bus_voltages = system.network.solve(net.machines, next.machines, t_next);
  check_synchronism(next, net, config);
  return next;
}

}  // namespace uvls::grid
