#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uvls/grid/integrator.hpp"
#include "uvls/grid/machine.hpp"
#include "uvls/grid/power_flow.hpp"
#include "uvls/grid/ybus.hpp"

namespace uvls::grid {

struct DynamicState {
  double t = 0.0;
  std::vector<MachineState> machines;
  std::vector<Complex> bus_voltages;  // per bus position

  Eigen::VectorXd pack() const;
  void unpack(const Eigen::VectorXd& x);
};

// Algebraic divergence, a singular network or loss of synchronism during
// time-domain simulation. Recoverable: the environment turns it into a
// terminal transition.
class VoltageCollapse : public GridError {
 public:
  VoltageCollapse(const std::string& what, double time) : GridError(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class InitializationError : public GridError {
 public:
  InitializationError(const std::string& what, std::size_t machine)
      : GridError(what), machine_(machine) {}
  std::size_t machine() const { return machine_; }

 private:
  std::size_t machine_;
};

// Network equations for one topology variant, factored once. Machines enter
// as Norton sources; a slack bus without a machine is held at its
// power-flow voltage (infinite bus).
class NetworkSolver {
 public:
  NetworkSolver(const NetworkCase& net, const AdmittanceMatrix& ybus,
                const std::vector<Complex>& fixed_voltage);

  // Bus voltages consistent with the given machine states. Throws
  // VoltageCollapse (stamped with `t`) on singular or non-finite solutions.
  std::vector<Complex> solve(const std::vector<MachineModel>& machines,
                             const std::vector<MachineState>& states, double t) const;

 private:
  std::size_t nbus_ = 0;
  std::vector<std::size_t> machine_pos_;  // bus position per machine
  std::vector<long> free_index_;          // bus position -> row among free buses, -1 if fixed
  std::vector<std::pair<std::size_t, Complex>> fixed_;
  std::vector<Complex> norton_;  // per machine
  Eigen::MatrixXcd z_;           // free buses x machines
  Eigen::VectorXcd w_;           // free-bus response to fixed voltages
  bool singular_ = false;
};

struct DynamicSystem {
  const NetworkCase* net = nullptr;
  std::vector<ControlReferences> refs;
  NetworkSolver network;
  double omega_base = 0.0;
};

struct Initialization {
  DynamicState state;
  std::vector<ControlReferences> refs;
  std::vector<Complex> load_admittance;  // per bus, constant-impedance equivalents
  std::vector<Complex> fixed_voltage;    // per bus; NaN where not fixed
};

// Equilibrium from a converged power flow. Throws InitializationError when a
// machine's exciter or governor would have to sit outside its limits.
Initialization init_dynamic_state(const NetworkCase& net, const PowerFlowSolution& pf);

// Stacked machine derivatives at `state` using its stored bus voltages.
Eigen::VectorXd state_derivative(const DynamicState& state, const DynamicSystem& system);

// Advance by one step h: explicit predictor, trapezoidal corrector, with a
// network solve for each corrector pass. Returns a consistent state.
DynamicState step(const DynamicState& state, const DynamicSystem& system,
                  const IntegratorConfig& config);

// Fixed-voltage buses for a network: machine-less slack buses.
std::vector<Complex> fixed_voltages(const NetworkCase& net, const std::vector<Complex>& pf_voltage);

}  // namespace uvls::grid
