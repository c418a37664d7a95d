#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "uvls/env/tvrc.hpp"

namespace uvls::env {

// Per-bus shed step of the discrete action space: 0 or 10 % per action.
inline constexpr double kShedStep = 0.1;

struct ActionIndex {
  std::uint32_t index = 0;
  friend bool operator==(ActionIndex, ActionIndex) = default;
};

inline std::uint32_t action_count(std::size_t n_controlled) { return 1u << n_controlled; }

// Bit i (least significant first) selects controlled bus i.
std::vector<double> decode_action(ActionIndex action, std::size_t n_controlled);
ActionIndex encode_action(std::span<const double> shed_fractions);

inline ActionIndex no_op_action() { return {0}; }
inline ActionIndex all_shed_action(std::size_t n_controlled) {
  return {action_count(n_controlled) - 1};
}

// Load state seen by the reward at one action instant, per controlled bus.
struct LoadAccounting {
  std::vector<double> before_action;  // P_Li(t)
  std::vector<double> shed;           // Delta P_Li(t), this step
  double initial_total = 0.0;         // P_L0
};

// Percent of the initial controllable load that remains after the action.
double remaining_load_percent(const LoadAccounting& loads);

// Any violation: sum of negative deltas in percent of 1.0 p.u. (always < 0).
// Otherwise: remaining controllable load in percent of P_L0 (always >= 0).
double reward(const Observation& observation, const LoadAccounting& loads);

// Reward assigned to the step on which the simulation collapses: the
// violation branch at -1.0 p.u. on every monitored bus.
inline double collapse_reward(std::size_t n_monitored) {
  return -100.0 * static_cast<double>(n_monitored);
}

struct StepViolation {
  double min_delta = 0.0;
  bool collapsed = false;
};

// 1 when no monitored bus violated the envelope at any logged step and the
// episode did not collapse; else 0.
int success_flag(std::span<const StepViolation> log);

class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace uvls::env
