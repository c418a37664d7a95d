#pragma once

#include <vector>

#include "uvls/grid/network.hpp"
#include "uvls/grid/ybus.hpp"

namespace uvls::grid {

struct PowerFlowOptions {
  double tolerance = 1e-10;  // max |mismatch|, p.u.
  int max_iterations = 30;
};

struct PowerFlowSolution {
  std::vector<Complex> voltage;        // per bus position
  std::vector<Complex> injection;      // net complex power injected per bus
  std::vector<Complex> machine_power;  // per machine P + jQ
  int iterations = 0;
  double mismatch = 0.0;
};

class PowerFlowDivergence : public GridError {
 public:
  PowerFlowDivergence(const std::string& what, double mismatch, int iterations)
      : GridError(what), mismatch_(mismatch), iterations_(iterations) {}
  double mismatch() const { return mismatch_; }
  int iterations() const { return iterations_; }

 private:
  double mismatch_;
  int iterations_;
};

// Newton-Raphson in polar coordinates with loads as constant power.
PowerFlowSolution solve_power_flow(const NetworkCase& net, const PowerFlowOptions& options = {});

// Largest absolute complex power mismatch over all non-slack buses.
double power_mismatch(const NetworkCase& net, const AdmittanceMatrix& ybus,
                      const std::vector<Complex>& voltage);

}  // namespace uvls::grid
