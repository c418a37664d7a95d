#pragma once

#include <array>

#include <Eigen/Dense>

#include "uvls/grid/network.hpp"

namespace uvls::grid {

inline constexpr std::size_t kMachineStateSize = 9;

struct MachineState {
  double delta = 0.0;     // rotor angle, rad
  double omega = 0.0;     // speed deviation, p.u.
  double eq_prime = 0.0;  // E'_q
  double ed_prime = 0.0;  // E'_d
  double efd = 0.0;       // exciter output
  double pm = 0.0;        // governor output
  std::array<double, 3> pss{};  // washout, lead-lag 1, lead-lag 2

  void store(double* out) const;
  static MachineState load(const double* in);
};

struct ControlReferences {
  double v_ref = 1.0;
  double p_ref = 0.0;
};

// Stator equations written as I = A(delta) V + c in network (x, y)
// coordinates, with V and I the terminal voltage and injected current.
struct StatorModel {
  Eigen::Matrix2d a;
  Eigen::Vector2d c;
};
StatorModel stator_model(const MachineModel& model, const MachineState& state);

Complex stator_current(const MachineModel& model, const MachineState& state, Complex v_terminal);

double pss_output(const PssParams& pss, const MachineState& state);

// Time derivative of every machine state with limiters applied: a state sitting
// on a limit does not move further outward.
MachineState machine_derivative(const MachineModel& model, const ControlReferences& refs,
                                const MachineState& state, Complex v_terminal,
                                double omega_base);

// Clamp limited states (exciter, governor) into their ranges.
void apply_limits(const MachineModel& model, MachineState& state);

}  // namespace uvls::grid
