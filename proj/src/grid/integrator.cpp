#include "uvls/grid/integrator.hpp"

#include <string>

namespace uvls::grid {

std::size_t steps_for(double duration, double step) {
  const double ratio = duration / step;
  const auto n = std::llround(ratio);
  if (n < 0 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
    throw GridError("duration " + std::to_string(duration) + " s is not a multiple of step " +
                    std::to_string(step) + " s");
  }
  return static_cast<std::size_t>(n);
}

void validate(const IntegratorConfig& config) {
  if (!(config.step > 0.0)) throw GridError("integration step must be positive");
  if (!(config.horizon > 0.0)) throw GridError("horizon must be positive");
  steps_for(config.horizon, config.step);
  if (config.max_corrector_iterations < 1) throw GridError("need at least one corrector pass");
  if (!(config.corrector_tolerance > 0.0)) throw GridError("corrector tolerance must be positive");
}

}  // namespace uvls::grid
