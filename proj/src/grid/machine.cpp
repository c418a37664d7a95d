#include "uvls/grid/machine.hpp"

#include <algorithm>
#include <cmath>

namespace uvls::grid {

void MachineState::store(double* out) const {
  out[0] = delta;
  out[1] = omega;
  out[2] = eq_prime;
  out[3] = ed_prime;
  out[4] = efd;
  out[5] = pm;
  out[6] = pss[0];
  out[7] = pss[1];
  out[8] = pss[2];
}

MachineState MachineState::load(const double* in) {
  MachineState s;
  s.delta = in[0];
  s.omega = in[1];
  s.eq_prime = in[2];
  s.ed_prime = in[3];
  s.efd = in[4];
  s.pm = in[5];
  s.pss = {in[6], in[7], in[8]};
  return s;
}

namespace {

// Network-to-rotor rotation: [Vd; Vq] = T [Vx; Vy].
Eigen::Matrix2d park(double delta) {
  const double s = std::sin(delta), c = std::cos(delta);
  Eigen::Matrix2d t;
  t << s, -c, c, s;
  return t;
}

}  // namespace

StatorModel stator_model(const MachineModel& model, const MachineState& state) {
  // Id = (E'q - Vq) / x'd,  Iq = (Vd - E'd) / x'q
  Eigen::Matrix2d d;
  d << 0.0, -1.0 / model.xd_prime, 1.0 / model.xq_prime, 0.0;
  Eigen::Vector2d e(state.eq_prime / model.xd_prime, -state.ed_prime / model.xq_prime);
  const Eigen::Matrix2d t = park(state.delta);
  return {t.transpose() * d * t, t.transpose() * e};
}

Complex stator_current(const MachineModel& model, const MachineState& state, Complex v_terminal) {
  const auto st = stator_model(model, state);
  const Eigen::Vector2d i = st.a * Eigen::Vector2d(v_terminal.real(), v_terminal.imag()) + st.c;
  return {i(0), i(1)};
}

double pss_output(const PssParams& p, const MachineState& s) {
  const double washout = p.gain * s.omega - s.pss[0];
  const double lead1 = (p.t1 / p.t2) * washout + s.pss[1];
  const double lead2 = (p.t3 / p.t4) * lead1 + s.pss[2];
  return std::clamp(lead2, p.v_min, p.v_max);
}

MachineState machine_derivative(const MachineModel& m, const ControlReferences& refs,
                                const MachineState& s, Complex v_terminal, double omega_base) {
  const Complex i = stator_current(m, s, v_terminal);
  const double pe = (v_terminal * std::conj(i)).real();

  const Eigen::Matrix2d t = park(s.delta);
  const Eigen::Vector2d idq = t * Eigen::Vector2d(i.real(), i.imag());
  const double id = idq(0), iq = idq(1);

  MachineState d;
  d.delta = omega_base * s.omega;
  d.omega = (s.pm - pe - m.damping * s.omega) / (2.0 * m.inertia);
  d.eq_prime = (s.efd - s.eq_prime - (m.xd - m.xd_prime) * id) / m.td0_prime;
  d.ed_prime = (-s.ed_prime + (m.xq - m.xq_prime) * iq) / m.tq0_prime;

  const double vpss = pss_output(m.pss, s);
  d.efd = (m.exciter.gain * (refs.v_ref - std::abs(v_terminal) + vpss) - s.efd) /
          m.exciter.time_constant;
  if ((s.efd >= m.exciter.efd_max && d.efd > 0.0) || (s.efd <= m.exciter.efd_min && d.efd < 0.0)) {
    d.efd = 0.0;
  }

  d.pm = (refs.p_ref - s.omega / m.governor.droop - s.pm) / m.governor.time_constant;
  if ((s.pm >= m.governor.pm_max && d.pm > 0.0) || (s.pm <= m.governor.pm_min && d.pm < 0.0)) {
    d.pm = 0.0;
  }

  const auto& p = m.pss;
  const double washout_in = p.gain * s.omega;
  const double washout = washout_in - s.pss[0];
  const double lead1 = (p.t1 / p.t2) * washout + s.pss[1];
  d.pss[0] = (washout_in - s.pss[0]) / p.washout;
  d.pss[1] = ((1.0 - p.t1 / p.t2) * washout - s.pss[1]) / p.t2;
  d.pss[2] = ((1.0 - p.t3 / p.t4) * lead1 - s.pss[2]) / p.t4;
  return d;
}

void apply_limits(const MachineModel& m, MachineState& s) {
  s.efd = std::clamp(s.efd, m.exciter.efd_min, m.exciter.efd_max);
  s.pm = std::clamp(s.pm, m.governor.pm_min, m.governor.pm_max);
}

}  // namespace uvls::grid
