#include "uvls/env/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace uvls::env {

std::vector<double> decode_action(ActionIndex action, std::size_t n_controlled) {
  if (n_controlled >= 32 || action.index >= action_count(n_controlled)) {
    throw UsageError("action index " + std::to_string(action.index) + " outside [0, 2^" +
                     std::to_string(n_controlled) + ")");
  }
  std::vector<double> u(n_controlled, 0.0);
  for (std::size_t i = 0; i < n_controlled; ++i) {
    if (action.index & (1u << i)) u[i] = kShedStep;
  }
  return u;
}

ActionIndex encode_action(std::span<const double> shed_fractions) {
  if (shed_fractions.size() >= 32) throw UsageError("too many controlled buses");
  ActionIndex a;
  for (std::size_t i = 0; i < shed_fractions.size(); ++i) {
    const double u = shed_fractions[i];
    if (u == kShedStep) {
      a.index |= 1u << i;
    } else if (u != 0.0) {
      throw UsageError("shed fraction " + std::to_string(u) + " is not in {0, 0.1}");
    }
  }
  return a;
}

double remaining_load_percent(const LoadAccounting& loads) {
  if (loads.before_action.size() != loads.shed.size()) {
    throw UsageError("load accounting vectors differ in length");
  }
  if (!(loads.initial_total > 0.0)) throw UsageError("initial controllable load must be positive");
  double remaining = 0.0;
  for (std::size_t i = 0; i < loads.shed.size(); ++i) remaining += loads.before_action[i] - loads.shed[i];
  return remaining / loads.initial_total * 100.0;
}

double reward(const Observation& observation, const LoadAccounting& loads) {
  if (observation.violated()) {
    double r = 0.0;
    for (double d : observation.deltas) r += std::min(d, 0.0);
    return r * 100.0;
  }
  return remaining_load_percent(loads);
}

int success_flag(std::span<const StepViolation> log) {
  const bool failed = std::any_of(log.begin(), log.end(), [](const StepViolation& s) {
    return s.collapsed || s.min_delta < 0.0;
  });
  return failed ? 0 : 1;
}

}  // namespace uvls::env
