#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "uvls/grid/network.hpp"

namespace uvls::grid {

// Y = G + jB, indexed by bus position in NetworkCase::buses.
struct AdmittanceMatrix {
  std::size_t order = 0;
  Eigen::MatrixXd g;
  Eigen::MatrixXd b;

  Complex at(std::size_t i, std::size_t j) const { return {g(i, j), b(i, j)}; }
  Eigen::MatrixXcd complex() const;
};

inline constexpr double kBoltedFaultConductance = 1e6;

// Three-phase bolted fault approximated by a large shunt at the near-end bus
// of an in-service branch.
struct FaultOverlay {
  std::size_t branch = 0;
  int bus = 0;
  double conductance = kBoltedFaultConductance;
};

struct YbusOptions {
  std::optional<FaultOverlay> fault;
  std::vector<std::size_t> tripped_branches;
  // Per-bus admittance added to the diagonal (constant-impedance loads);
  // empty means loads are not folded in.
  std::vector<Complex> load_admittance;
};

// Throws SingularTopologyError when the remaining in-service network leaves
// a bus without a path to the rest of the grid.
AdmittanceMatrix build_ybus(const NetworkCase& net, const YbusOptions& options = {});

}  // namespace uvls::grid
