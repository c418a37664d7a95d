#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uvls/env/mdp.hpp"

namespace uvls::learn {

enum class Origin { kExpert, kRandom };

std::string to_string(Origin origin);
Origin origin_from_string(const std::string& s);

// States are stored flattened (N_r x N deltas, oldest frame first).
struct Transition {
  std::vector<double> state;
  env::ActionIndex action;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;
  Origin origin = Origin::kRandom;
};

nlohmann::json to_json(const Transition& t);
Transition transition_from_json(const nlohmann::json& j);

// One JSON object per line.
void write_transitions(std::ostream& out, const std::vector<Transition>& transitions);
std::vector<Transition> read_transitions(std::istream& in);

}  // namespace uvls::learn
