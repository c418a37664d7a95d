#include "uvls/grid/ybus.hpp"

#include <algorithm>

namespace uvls::grid {

Eigen::MatrixXcd AdmittanceMatrix::complex() const {
  Eigen::MatrixXcd y(order, order);
  y.real() = g;
  y.imag() = b;
  return y;
}

AdmittanceMatrix build_ybus(const NetworkCase& net, const YbusOptions& options) {
  const std::size_t n = net.buses.size();
  const auto is_tripped = [&](std::size_t k) {
    return std::find(options.tripped_branches.begin(), options.tripped_branches.end(), k) !=
           options.tripped_branches.end();
  };

  if (n > 1) {
    const auto seen = connected_buses(net, options.tripped_branches);
    for (std::size_t i = 0; i < n; ++i) {
      if (!seen[i]) {
        throw SingularTopologyError("bus " + std::to_string(net.buses[i].id) +
                                    " is disconnected from the network");
      }
    }
  }

  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto& br = net.branches[k];
    if (!br.in_service || is_tripped(k)) continue;
    const auto f = net.bus_index(br.from_bus);
    const auto t = net.bus_index(br.to_bus);
    const Complex ys = 1.0 / br.series_impedance;
    const Complex ysh{0.0, br.charging / 2.0};
    y(f, f) += ys + ysh;
    y(t, t) += ys + ysh;
    y(f, t) -= ys;
    y(t, f) -= ys;
  }
  for (std::size_t i = 0; i < n; ++i) y(i, i) += net.buses[i].shunt;

  if (!options.load_admittance.empty()) {
    if (options.load_admittance.size() != n) {
      throw GridError("load admittance vector does not match bus count");
    }
    for (std::size_t i = 0; i < n; ++i) y(i, i) += options.load_admittance[i];
  }

  if (options.fault) {
    const auto& f = *options.fault;
    if (f.branch >= net.branches.size()) throw GridError("fault on unknown branch");
    const auto& br = net.branches[f.branch];
    if (!br.in_service || is_tripped(f.branch)) throw GridError("fault on an out-of-service branch");
    if (f.bus != br.from_bus && f.bus != br.to_bus) {
      throw GridError("fault bus is not an endpoint of the faulted branch");
    }
    y(net.bus_index(f.bus), net.bus_index(f.bus)) += f.conductance;
  }

  AdmittanceMatrix out;
  out.order = n;
  out.g = y.real();
  out.b = y.imag();
  return out;
}

}  // namespace uvls::grid
