#include "uvls/learn/transition.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

namespace uvls::learn {

using nlohmann::json;

std::string to_string(Origin origin) { return origin == Origin::kExpert ? "expert" : "random"; }

Origin origin_from_string(const std::string& s) {
  if (s == "expert") return Origin::kExpert;
  if (s == "random") return Origin::kRandom;
  throw std::invalid_argument("unknown transition origin '" + s + "'");
}

json to_json(const Transition& t) {
  return {{"s", t.state},           {"a", t.action.index},      {"r", t.reward},
          {"s_next", t.next_state}, {"terminal", t.terminal}, {"origin", to_string(t.origin)}};
}

Transition transition_from_json(const json& j) {
  Transition t;
  t.state = j.at("s").get<std::vector<double>>();
  t.action.index = j.at("a").get<std::uint32_t>();
  t.reward = j.at("r").get<double>();
  t.next_state = j.at("s_next").get<std::vector<double>>();
  t.terminal = j.at("terminal").get<bool>();
  t.origin = origin_from_string(j.at("origin").get<std::string>());
  return t;
}

void write_transitions(std::ostream& out, const std::vector<Transition>& transitions) {
  for (const auto& t : transitions) out << to_json(t).dump() << '\n';
}

std::vector<Transition> read_transitions(std::istream& in) {
  std::vector<Transition> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    try {
      out.push_back(transition_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw std::invalid_argument("transition record " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace uvls::learn
