#include "uvls/grid/case_io.hpp"

#include <fstream>

namespace uvls::grid {

using nlohmann::json;

namespace {

Complex complex_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw CaseError("complex value must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json complex_to(Complex c) { return json::array({c.real(), c.imag()}); }

BusType bus_type_from(const std::string& s) {
  if (s == "slack") return BusType::kSlack;
  if (s == "PV") return BusType::kPV;
  if (s == "PQ") return BusType::kPQ;
  throw CaseError("unknown bus type '" + s + "'");
}

std::string bus_type_to(BusType t) {
  switch (t) {
    case BusType::kSlack:
      return "slack";
    case BusType::kPV:
      return "PV";
    case BusType::kPQ:
      return "PQ";
  }
  return "PQ";
}

template <typename T>
T opt(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

MachineModel machine_from(const json& j) {
  MachineModel m;
  m.bus = j.at("bus").get<int>();
  m.inertia = j.at("inertia").get<double>();
  m.damping = opt(j, "damping", 0.0);
  m.xd = j.at("x_d").get<double>();
  m.xq = j.at("x_q").get<double>();
  m.xd_prime = j.at("x_d_prime").get<double>();
  m.xq_prime = j.at("x_q_prime").get<double>();
  m.td0_prime = j.at("T_d0_prime").get<double>();
  m.tq0_prime = j.at("T_q0_prime").get<double>();
  m.p_dispatch = opt(j, "p_dispatch", 0.0);
  if (auto e = j.find("exciter"); e != j.end()) {
    m.exciter.gain = e->at("K_A").get<double>();
    m.exciter.time_constant = e->at("T_A").get<double>();
    m.exciter.efd_min = e->at("E_fd_min").get<double>();
    m.exciter.efd_max = e->at("E_fd_max").get<double>();
  }
  if (auto g = j.find("governor"); g != j.end()) {
    m.governor.droop = g->at("R").get<double>();
    m.governor.time_constant = g->at("T_G").get<double>();
    m.governor.pm_min = g->at("P_m_min").get<double>();
    m.governor.pm_max = g->at("P_m_max").get<double>();
  }
  if (auto p = j.find("pss"); p != j.end()) {
    m.pss.washout = p->at("T_W").get<double>();
    m.pss.t1 = p->at("T_1").get<double>();
    m.pss.t2 = p->at("T_2").get<double>();
    m.pss.t3 = p->at("T_3").get<double>();
    m.pss.t4 = p->at("T_4").get<double>();
    m.pss.gain = p->at("K_PSS").get<double>();
    m.pss.v_min = p->at("V_min").get<double>();
    m.pss.v_max = p->at("V_max").get<double>();
  }
  return m;
}

json machine_to(const MachineModel& m) {
  return json{
      {"bus", m.bus},
      {"inertia", m.inertia},
      {"damping", m.damping},
      {"x_d", m.xd},
      {"x_q", m.xq},
      {"x_d_prime", m.xd_prime},
      {"x_q_prime", m.xq_prime},
      {"T_d0_prime", m.td0_prime},
      {"T_q0_prime", m.tq0_prime},
      {"p_dispatch", m.p_dispatch},
      {"exciter",
       {{"K_A", m.exciter.gain},
        {"T_A", m.exciter.time_constant},
        {"E_fd_min", m.exciter.efd_min},
        {"E_fd_max", m.exciter.efd_max}}},
      {"governor",
       {{"R", m.governor.droop},
        {"T_G", m.governor.time_constant},
        {"P_m_min", m.governor.pm_min},
        {"P_m_max", m.governor.pm_max}}},
      {"pss",
       {{"T_W", m.pss.washout},
        {"T_1", m.pss.t1},
        {"T_2", m.pss.t2},
        {"T_3", m.pss.t3},
        {"T_4", m.pss.t4},
        {"K_PSS", m.pss.gain},
        {"V_min", m.pss.v_min},
        {"V_max", m.pss.v_max}}},
  };
}

}  // namespace

NetworkCase case_from_json(const json& doc) {
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kCaseFormatVersion) {
      throw CaseError("unsupported case format_version " + std::to_string(version));
    }
    NetworkCase net;
    net.name = opt<std::string>(doc, "name", "");
    net.base_power = doc.at("base_power").get<double>();
    net.frequency = opt(doc, "frequency", 60.0);
    for (const auto& jb : doc.at("buses")) {
      Bus b;
      b.id = jb.at("id").get<int>();
      b.type = bus_type_from(jb.at("type").get<std::string>());
      if (auto s = jb.find("shunt"); s != jb.end()) b.shunt = complex_from(*s);
      b.v_set = opt(jb, "v_set", 1.0);
      b.angle_set = opt(jb, "angle_set", 0.0);
      net.buses.push_back(b);
    }
    for (const auto& jb : doc.at("branches")) {
      Branch br;
      br.from_bus = jb.at("from_bus").get<int>();
      br.to_bus = jb.at("to_bus").get<int>();
      br.series_impedance = complex_from(jb.at("series_impedance"));
      br.charging = opt(jb, "charging", 0.0);
      const auto status = opt<std::string>(jb, "status", "in");
      if (status != "in" && status != "out") throw CaseError("branch status must be in/out");
      br.in_service = status == "in";
      net.branches.push_back(br);
    }
    for (const auto& jm : doc.value("machines", json::array())) net.machines.push_back(machine_from(jm));
    for (const auto& jl : doc.value("loads", json::array())) {
      net.loads.push_back({jl.at("bus").get<int>(), jl.at("active_power").get<double>(),
                           jl.at("reactive_power").get<double>()});
    }
    net.controlled_buses = doc.at("controlled_buses").get<std::vector<int>>();
    net.monitored_buses = doc.at("monitored_buses").get<std::vector<int>>();
    validate(net);
    return net;
  } catch (const json::exception& e) {
    throw CaseError(std::string("malformed case document: ") + e.what());
  }
}

json case_to_json(const NetworkCase& net) {
  json doc;
  doc["format_version"] = kCaseFormatVersion;
  doc["name"] = net.name;
  doc["base_power"] = net.base_power;
  doc["frequency"] = net.frequency;
  doc["buses"] = json::array();
  for (const auto& b : net.buses) {
    doc["buses"].push_back({{"id", b.id},
                            {"type", bus_type_to(b.type)},
                            {"shunt", complex_to(b.shunt)},
                            {"v_set", b.v_set},
                            {"angle_set", b.angle_set}});
  }
  doc["branches"] = json::array();
  for (const auto& br : net.branches) {
    doc["branches"].push_back({{"from_bus", br.from_bus},
                               {"to_bus", br.to_bus},
                               {"series_impedance", complex_to(br.series_impedance)},
                               {"charging", br.charging},
                               {"status", br.in_service ? "in" : "out"}});
  }
  doc["machines"] = json::array();
  for (const auto& m : net.machines) doc["machines"].push_back(machine_to(m));
  doc["loads"] = json::array();
  for (const auto& l : net.loads) {
    doc["loads"].push_back(
        {{"bus", l.bus}, {"active_power", l.active_power}, {"reactive_power", l.reactive_power}});
  }
  doc["controlled_buses"] = net.controlled_buses;
  doc["monitored_buses"] = net.monitored_buses;
  return doc;
}

NetworkCase load_case(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CaseError("cannot open case file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw CaseError("case file " + path.string() + " is not valid JSON: " + e.what());
  }
  return case_from_json(doc);
}

void save_case(const NetworkCase& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw CaseError("cannot write case file " + path.string());
  out << case_to_json(net).dump(2) << '\n';
}

}  // namespace uvls::grid
