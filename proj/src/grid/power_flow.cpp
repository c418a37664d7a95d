#include "uvls/grid/power_flow.hpp"

#include <cmath>
#include <sstream>

namespace uvls::grid {

namespace {

struct Schedule {
  std::vector<double> p;  // specified net injection
  std::vector<double> q;
};

Schedule scheduled_injection(const NetworkCase& net) {
  const auto n = net.buses.size();
  Schedule s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (const auto& l : net.loads) {
    const auto i = net.bus_index(l.bus);
    s.p[i] -= l.active_power;
    s.q[i] -= l.reactive_power;
  }
  for (const auto& m : net.machines) {
    const auto i = net.bus_index(m.bus);
    if (net.buses[i].type == BusType::kPV) s.p[i] += m.p_dispatch;
  }
  return s;
}

std::vector<Complex> calc_injection(const Eigen::MatrixXcd& y, const std::vector<Complex>& v) {
  const auto n = v.size();
  std::vector<Complex> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    Complex current{0.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) current += y(i, k) * v[k];
    s[i] = v[i] * std::conj(current);
  }
  return s;
}

}  // namespace

double power_mismatch(const NetworkCase& net, const AdmittanceMatrix& ybus,
                      const std::vector<Complex>& voltage) {
  const auto sched = scheduled_injection(net);
  const auto s = calc_injection(ybus.complex(), voltage);
  double worst = 0.0;
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    const auto type = net.buses[i].type;
    if (type == BusType::kSlack) continue;
    worst = std::max(worst, std::abs(s[i].real() - sched.p[i]));
    if (type == BusType::kPQ) worst = std::max(worst, std::abs(s[i].imag() - sched.q[i]));
  }
  return worst;
}

PowerFlowSolution solve_power_flow(const NetworkCase& net, const PowerFlowOptions& options) {
  const auto n = net.buses.size();
  const auto ybus = build_ybus(net);
  const Eigen::MatrixXcd y = ybus.complex();
  const auto sched = scheduled_injection(net);

  std::vector<double> vm(n, 1.0);
  std::vector<double> va(n, 0.0);
  std::vector<std::size_t> pvpq;  // angle unknowns
  std::vector<std::size_t> pq;    // magnitude unknowns
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = net.buses[i];
    if (b.type != BusType::kPQ) vm[i] = b.v_set;
    if (b.type == BusType::kSlack) {
      va[i] = b.angle_set;
    } else {
      pvpq.push_back(i);
      if (b.type == BusType::kPQ) pq.push_back(i);
    }
  }
  std::vector<int> col_ang(n, -1), col_mag(n, -1);
  for (std::size_t k = 0; k < pvpq.size(); ++k) col_ang[pvpq[k]] = static_cast<int>(k);
  for (std::size_t k = 0; k < pq.size(); ++k) col_mag[pq[k]] = static_cast<int>(pvpq.size() + k);
  const auto dim = pvpq.size() + pq.size();

  auto voltages = [&] {
    std::vector<Complex> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::polar(vm[i], va[i]);
    return v;
  };

  PowerFlowSolution sol;
  double mismatch = 0.0;
  for (int iter = 0;; ++iter) {
    const auto v = voltages();
    const auto s = calc_injection(y, v);
    Eigen::VectorXd f(dim);
    for (std::size_t k = 0; k < pvpq.size(); ++k) f(k) = s[pvpq[k]].real() - sched.p[pvpq[k]];
    for (std::size_t k = 0; k < pq.size(); ++k) f(pvpq.size() + k) = s[pq[k]].imag() - sched.q[pq[k]];
    mismatch = dim == 0 ? 0.0 : f.cwiseAbs().maxCoeff();
    if (!std::isfinite(mismatch)) {
      throw PowerFlowDivergence("power flow produced non-finite mismatch", mismatch, iter);
    }
    if (mismatch < options.tolerance) {
      sol.iterations = iter;
      break;
    }
    if (iter >= options.max_iterations) {
      std::ostringstream msg;
      msg << "power flow did not converge after " << iter << " iterations (mismatch " << mismatch
          << " p.u.)";
      throw PowerFlowDivergence(msg.str(), mismatch, iter);
    }

    // Jacobian of (P, Q) w.r.t. (angle, magnitude), standard polar form.
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t i = 0; i < n; ++i) {
      const int ri_p = col_ang[i];
      const int ri_q = col_mag[i];
      if (ri_p < 0) continue;
      for (std::size_t k = 0; k < n; ++k) {
        const double gik = y(i, k).real();
        const double bik = y(i, k).imag();
        const double th = va[i] - va[k];
        const double c = std::cos(th), sn = std::sin(th);
        if (i != k) {
          const double dp_dth = vm[i] * vm[k] * (gik * sn - bik * c);
          const double dp_dv = vm[i] * (gik * c + bik * sn);
          const double dq_dth = -vm[i] * vm[k] * (gik * c + bik * sn);
          const double dq_dv = vm[i] * (gik * sn - bik * c);
          if (col_ang[k] >= 0) {
            jac(ri_p, col_ang[k]) = dp_dth;
            if (ri_q >= 0) jac(ri_q, col_ang[k]) = dq_dth;
          }
          if (col_mag[k] >= 0) {
            jac(ri_p, col_mag[k]) = dp_dv;
            if (ri_q >= 0) jac(ri_q, col_mag[k]) = dq_dv;
          }
        }
      }
      const double gii = y(i, i).real();
      const double bii = y(i, i).imag();
      const double pi = s[i].real(), qi = s[i].imag();
      jac(ri_p, ri_p) = -qi - bii * vm[i] * vm[i];
      if (ri_q >= 0) {
        jac(ri_q, ri_p) = pi - gii * vm[i] * vm[i];
        jac(ri_p, ri_q) = pi / vm[i] + gii * vm[i];
        jac(ri_q, ri_q) = qi / vm[i] - bii * vm[i];
      }
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible()) {
      throw PowerFlowDivergence("singular power-flow Jacobian", mismatch, iter);
    }
    const Eigen::VectorXd dx = lu.solve(-f);
    for (std::size_t k = 0; k < pvpq.size(); ++k) va[pvpq[k]] += dx(k);
    for (std::size_t k = 0; k < pq.size(); ++k) vm[pq[k]] += dx(pvpq.size() + k);
    for (auto i : pq) {
      if (vm[i] <= 0.0) {
        throw PowerFlowDivergence("power flow voltage magnitude collapsed to zero", mismatch, iter);
      }
    }
  }

  sol.voltage = voltages();
  sol.injection = calc_injection(y, sol.voltage);
  sol.mismatch = mismatch;
  sol.machine_power.resize(net.machines.size());
  for (std::size_t m = 0; m < net.machines.size(); ++m) {
    const auto i = net.bus_index(net.machines[m].bus);
    // Injection at the bus plus whatever load sits there is the machine output.
    Complex s = sol.injection[i];
    for (const auto& l : net.loads) {
      if (l.bus == net.machines[m].bus) s += Complex{l.active_power, l.reactive_power};
    }
    sol.machine_power[m] = s;
  }
  return sol;
}

}  // namespace uvls::grid
