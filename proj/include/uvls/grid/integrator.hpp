#pragma once

#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "uvls/grid/network.hpp"

namespace uvls::grid {

struct IntegratorConfig {
  double step = 0.01;     // h, s
  double horizon = 15.0;  // s
  double algebraic_tolerance = 1e-9;
  double corrector_tolerance = 1e-11;
  int max_corrector_iterations = 40;
  // Rotor-angle spread (rad) treated as loss of synchronism; <= 0 disables.
  double max_angle_spread = 3.14159265358979323846;
};

// Throws GridError unless h > 0 and the horizon is a whole number of steps.
void validate(const IntegratorConfig& config);

// Number of integration steps covering `duration`; duration must be a
// multiple of the step.
std::size_t steps_for(double duration, double step);

// Nearest step index for an event time.
inline std::size_t step_index(double time, double step) {
  return static_cast<std::size_t>(std::llround(time / step));
}

struct CorrectorReport {
  int iterations = 0;
  bool converged = false;
};

// One step of the explicit-Euler predictor / trapezoidal corrector pair. The
// corrector is iterated until successive iterates differ by less than the
// configured tolerance (infinity norm), which yields the implicit
// trapezoidal update when it converges. `f0` is the derivative at `x`.
template <typename Derivative>
Eigen::VectorXd predictor_corrector_step(const Eigen::VectorXd& x, const Eigen::VectorXd& f0,
                                         double h, Derivative&& derivative,
                                         const IntegratorConfig& config,
                                         CorrectorReport* report = nullptr) {
  Eigen::VectorXd next = x + h * f0;
  CorrectorReport rep;
  for (int it = 0; it < config.max_corrector_iterations; ++it) {
    Eigen::VectorXd corrected = x + 0.5 * h * (f0 + derivative(next));
    const double change = (corrected - next).lpNorm<Eigen::Infinity>();
    next = std::move(corrected);
    rep.iterations = it + 1;
    if (change < config.corrector_tolerance) {
      rep.converged = true;
      break;
    }
  }
  if (report) *report = rep;
  return next;
}

}  // namespace uvls::grid
