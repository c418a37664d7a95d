#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace uvls::grid {

using Complex = std::complex<double>;

enum class BusType { kSlack, kPV, kPQ };

struct Bus {
  int id = 0;
  BusType type = BusType::kPQ;
  Complex shunt{0.0, 0.0};  // admittance to ground, p.u.
  double v_set = 1.0;       // slack/PV magnitude setpoint
  double angle_set = 0.0;   // slack angle, rad
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  Complex series_impedance{0.0, 0.1};
  double charging = 0.0;  // total line charging susceptance, split half per end
  bool in_service = true;
};

struct ExciterParams {
  double gain = 200.0;
  double time_constant = 0.02;
  double efd_min = -5.0;
  double efd_max = 5.0;
};

struct GovernorParams {
  double droop = 0.05;
  double time_constant = 0.5;
  double pm_min = 0.0;
  double pm_max = 10.0;
};

// Washout followed by two lead-lag stages; output enters the exciter summing
// junction.
struct PssParams {
  double washout = 10.0;
  double t1 = 0.05;
  double t2 = 0.02;
  double t3 = 3.0;
  double t4 = 5.4;
  double gain = 20.0;
  double v_min = -0.1;
  double v_max = 0.1;
};

// Two-axis synchronous machine, all quantities on the system base.
struct MachineModel {
  int bus = 0;
  double inertia = 6.5;   // H, s
  double damping = 0.0;   // D, p.u. power / p.u. speed
  double xd = 1.8;
  double xq = 1.7;
  double xd_prime = 0.3;
  double xq_prime = 0.55;
  double td0_prime = 8.0;
  double tq0_prime = 0.4;
  double p_dispatch = 0.0;  // scheduled output at a PV bus
  ExciterParams exciter;
  GovernorParams governor;
  PssParams pss;
};

struct Load {
  int bus = 0;
  double active_power = 0.0;
  double reactive_power = 0.0;
};

struct NetworkCase {
  std::string name;
  double base_power = 100.0;  // MVA
  double frequency = 60.0;    // Hz
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<MachineModel> machines;
  std::vector<Load> loads;
  std::vector<int> controlled_buses;
  std::vector<int> monitored_buses;

  // Position of bus `id` in `buses`; throws CaseError when absent.
  std::size_t bus_index(int id) const;
  bool has_bus(int id) const;
};

class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CaseError : public GridError {
 public:
  using GridError::GridError;
};

class SingularTopologyError : public GridError {
 public:
  using GridError::GridError;
};

// Checks every structural invariant of a case: unique ids, referenced buses
// exist, one slack, non-empty controlled/monitored sets, non-negative loads,
// machine parameter ordering and no islanded buses.
void validate(const NetworkCase& net);

// Buses reachable from the first bus over in-service branches, optionally
// ignoring extra branches. Returns a per-bus flag vector.
std::vector<bool> connected_buses(const NetworkCase& net,
                                  const std::vector<std::size_t>& skip_branches = {});

// Machine index per bus position, -1 where no machine is attached.
std::vector<int> machine_at_bus(const NetworkCase& net);

}  // namespace uvls::grid
