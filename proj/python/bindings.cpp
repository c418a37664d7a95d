#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "uvls/env/environment.hpp"
#include "uvls/grid/case_io.hpp"
#include "uvls/learn/dqn.hpp"
#include "uvls/relay/relay.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace uvls;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<double> from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  return {a.data(), a.data() + a.size()};
}

json scenario_to_json(const env::ScenarioSpec& s) {
  return {{"id", s.id},
          {"load_scale", s.load_scale},
          {"fault_branch", s.fault_branch ? json(*s.fault_branch) : json(nullptr)},
          {"fault_duration", s.fault_duration},
          {"fault_apply_time", s.fault_apply_time},
          {"rng_seed", s.rng_seed}};
}

env::ScenarioSpec scenario_from_json(const json& j) {
  env::ScenarioSpec s;
  s.id = j.value("id", std::uint64_t{0});
  s.load_scale = j.value("load_scale", 1.0);
  s.fault_duration = j.value("fault_duration", 0.06);
  s.fault_apply_time = j.value("fault_apply_time", 0.6);
  s.rng_seed = j.value("rng_seed", std::uint64_t{0});
  if (auto f = j.find("fault_branch"); f != j.end() && !f->is_null()) s.fault_branch = f->get<std::size_t>();
  return s;
}

std::vector<env::ScenarioSpec> scenarios_from_text(const std::string& text) {
  std::vector<env::ScenarioSpec> out;
  for (const auto& j : json::parse(text)) out.push_back(scenario_from_json(j));
  return out;
}

std::string episode_text(const env::EpisodeResult& r) {
  json steps = json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"t", s.t},
                     {"action", s.action.index},
                     {"reward", s.reward},
                     {"min_delta", s.min_delta},
                     {"remaining_load_pct", s.remaining_load_pct},
                     {"collapsed", s.collapsed}});
  }
  return json{{"scenario_id", r.scenario_id},
              {"total_reward", r.total_reward},
              {"success", r.success},
              {"collapsed", r.collapsed},
              {"final_remaining_load_pct", r.final_remaining_load_pct},
              {"steps", steps}}
      .dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Undervoltage load shedding simulator, relay baseline and DQN learner";

  py::register_exception<env::ScenarioRejected>(m, "ScenarioRejected");
  py::register_exception<env::ScenarioError>(m, "ScenarioError");
  py::register_exception<learn::NumericalError>(m, "NumericalError");

  py::class_<grid::NetworkCase>(m, "NetworkCase")
      .def_property_readonly("n_buses", [](const grid::NetworkCase& n) { return n.buses.size(); })
      .def_property_readonly("n_branches", [](const grid::NetworkCase& n) { return n.branches.size(); })
      .def_readonly("controlled_buses", &grid::NetworkCase::controlled_buses)
      .def_readonly("monitored_buses", &grid::NetworkCase::monitored_buses)
      .def("to_json", [](const grid::NetworkCase& n) { return grid::case_to_json(n).dump(); });

  m.def("load_case", [](const std::string& path) { return grid::load_case(path); }, py::arg("path"));

  m.def(
      "generate_scenarios",
      [](const grid::NetworkCase& net, std::size_t count, std::uint64_t seed) {
        json out = json::array();
        for (const auto& s : env::generate_scenarios(net, count, seed)) out.push_back(scenario_to_json(s));
        return out.dump();
      },
      py::arg("case"), py::arg("count"), py::arg("seed"));

  m.def("eligible_fault_branches", &env::eligible_fault_branches, py::arg("case"));

  py::class_<env::Environment>(m, "Environment")
      .def(py::init<grid::NetworkCase>(), py::arg("case"))
      .def("reset", [](env::Environment& e, const std::string& scenario) {
        return to_array(e.reset(scenario_from_json(json::parse(scenario))).flatten());
      })
      .def("step", [](env::Environment& e, std::uint32_t action) {
        if (action >= e.n_actions()) throw py::value_error("action index out of range");
        const auto r = e.step({action});
        return py::make_tuple(to_array(r.state.flatten()), r.reward, r.terminal);
      })
      .def_property_readonly("terminal", &env::Environment::terminal)
      .def_property_readonly("time", &env::Environment::time)
      .def_property_readonly("clearing_time", &env::Environment::clearing_time)
      .def_property_readonly("state_size", &env::Environment::state_size)
      .def_property_readonly("n_actions", &env::Environment::n_actions)
      .def("action_instants", &env::Environment::action_instants)
      .def("result", [](const env::Environment& e) { return episode_text(e.result()); });

  m.def("decode_action", [](std::uint32_t a, std::size_t n) { return env::decode_action({a}, n); },
        py::arg("action"), py::arg("n_controlled"));

  m.def(
      "run_relay",
      [](env::Environment& e, const std::string& scenario, const std::string& config) {
        relay::RelayAgent agent(config.empty() ? relay::RelayConfig{}
                                               : relay::relay_config_from_json(json::parse(config)));
        return episode_text(env::run_episode(e, scenario_from_json(json::parse(scenario)), std::ref(agent)));
      },
      py::arg("env"), py::arg("scenario"), py::arg("relay_config") = "");

  m.def(
      "expert_transitions",
      [](env::Environment& e, const std::string& scenarios) {
        const auto pool = scenarios_from_text(scenarios);
        return relay::generate_expert_transitions(e, pool, {}).transitions.size();
      },
      py::arg("env"), py::arg("scenarios"));

  py::class_<learn::Checkpoint>(m, "Checkpoint")
      .def_readonly("episode", &learn::Checkpoint::episode)
      .def_readonly("epsilon", &learn::Checkpoint::epsilon)
      .def("q_values", [](const learn::Checkpoint& c, const py::array_t<double, py::array::c_style | py::array::forcecast>& s) {
        const auto x = from_array(s);
        const Eigen::VectorXd q = c.params.forward(x);
        return to_array(std::vector<double>(q.data(), q.data() + q.size()));
      })
      .def("act", [](const learn::Checkpoint& c, const py::array_t<double, py::array::c_style | py::array::forcecast>& s) {
        return learn::act(c.params, from_array(s)).index;
      })
      .def("save", [](const learn::Checkpoint& c, const std::string& path) { learn::save_checkpoint(c, path); })
      .def("to_json", [](const learn::Checkpoint& c) { return learn::to_json(c).dump(); });

  m.def("load_checkpoint", [](const std::string& path) { return learn::load_checkpoint(path); }, py::arg("path"));

  m.def(
      "train",
      [](env::Environment& e, const std::string& scenarios, const std::string& config, bool with_expert,
         const std::function<void(std::size_t, double)>& on_episode) {
        const auto pool = scenarios_from_text(scenarios);
        const auto cfg = learn::train_config_from_json(json::parse(config));
        learn::validate(cfg);
        std::vector<learn::Transition> expert;
        if (with_expert) expert = relay::generate_expert_transitions(e, pool, {}).transitions;
        learn::EpisodeCallback cb;
        if (on_episode) cb = [&](const learn::CurvePoint& p) { on_episode(p.episode, p.joint_reward); };
        auto r = learn::train(e, pool, expert, cfg, cb);
        std::vector<double> joint;
        for (const auto& p : r.curve) joint.push_back(p.joint_reward);
        return py::make_tuple(std::move(r.checkpoint), to_array(joint));
      },
      py::arg("env"), py::arg("scenarios"), py::arg("config"), py::arg("with_expert") = true,
      py::arg("on_episode") = nullptr);

  m.def("default_train_config", [] { return learn::to_json(learn::TrainConfig{}).dump(); });
}
