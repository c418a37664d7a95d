#include "uvls/grid/network.hpp"

#include <algorithm>
#include <queue>
#include <set>

namespace uvls::grid {

std::size_t NetworkCase::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return i;
  }
  throw CaseError("unknown bus id " + std::to_string(id));
}

bool NetworkCase::has_bus(int id) const {
  return std::any_of(buses.begin(), buses.end(), [id](const Bus& b) { return b.id == id; });
}

std::vector<bool> connected_buses(const NetworkCase& net,
                                  const std::vector<std::size_t>& skip_branches) {
  const std::size_t n = net.buses.size();
  std::vector<bool> seen(n, false);
  if (n == 0) return seen;
  std::unordered_map<int, std::size_t> pos;
  for (std::size_t i = 0; i < n; ++i) pos[net.buses[i].id] = i;

  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto& br = net.branches[k];
    if (!br.in_service) continue;
    if (std::find(skip_branches.begin(), skip_branches.end(), k) != skip_branches.end()) continue;
    const auto f = pos.at(br.from_bus);
    const auto t = pos.at(br.to_bus);
    adj[f].push_back(t);
    adj[t].push_back(f);
  }
  std::queue<std::size_t> todo;
  todo.push(0);
  seen[0] = true;
  while (!todo.empty()) {
    const auto u = todo.front();
    todo.pop();
    for (auto v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        todo.push(v);
      }
    }
  }
  return seen;
}

std::vector<int> machine_at_bus(const NetworkCase& net) {
  std::vector<int> out(net.buses.size(), -1);
  for (std::size_t m = 0; m < net.machines.size(); ++m) {
    out[net.bus_index(net.machines[m].bus)] = static_cast<int>(m);
  }
  return out;
}

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw CaseError(what);
}

void check_machine(const MachineModel& m, std::size_t idx) {
  const std::string tag = "machine " + std::to_string(idx) + ": ";
  require(m.inertia > 0.0, tag + "inertia must be positive");
  require(m.td0_prime > 0.0 && m.tq0_prime > 0.0, tag + "open-circuit time constants must be positive");
  require(m.xd_prime > 0.0 && m.xq_prime > 0.0, tag + "transient reactances must be positive");
  require(m.xd >= m.xd_prime, tag + "x_d must be >= x'_d");
  require(m.xq >= m.xq_prime, tag + "x_q must be >= x'_q");
  require(m.exciter.time_constant > 0.0, tag + "exciter time constant must be positive");
  require(m.exciter.efd_min < m.exciter.efd_max, tag + "exciter limits out of order");
  require(m.governor.time_constant > 0.0, tag + "governor time constant must be positive");
  require(m.governor.droop > 0.0, tag + "governor droop must be positive");
  require(m.governor.pm_min < m.governor.pm_max, tag + "governor limits out of order");
  const auto& p = m.pss;
  require(p.washout > 0.0 && p.t1 > 0.0 && p.t2 > 0.0 && p.t3 > 0.0 && p.t4 > 0.0,
          tag + "PSS time constants must be positive");
  require(p.v_min < p.v_max, tag + "PSS limits out of order");
}

}  // namespace

void validate(const NetworkCase& net) {
  require(net.base_power > 0.0, "base_power must be positive");
  require(net.frequency > 0.0, "frequency must be positive");
  require(!net.buses.empty(), "case has no buses");

  std::set<int> ids;
  int slack_count = 0;
  for (const auto& b : net.buses) {
    require(ids.insert(b.id).second, "duplicate bus id " + std::to_string(b.id));
    if (b.type == BusType::kSlack) ++slack_count;
  }
  require(slack_count == 1, "case must have exactly one slack bus");

  for (const auto& br : net.branches) {
    require(ids.count(br.from_bus) && ids.count(br.to_bus),
            "branch references unknown bus " + std::to_string(br.from_bus) + "-" +
                std::to_string(br.to_bus));
    require(br.from_bus != br.to_bus, "branch connects a bus to itself");
    require(std::abs(br.series_impedance) > 0.0, "branch with zero series impedance");
  }

  std::set<int> machine_buses;
  for (std::size_t m = 0; m < net.machines.size(); ++m) {
    const auto& mc = net.machines[m];
    require(ids.count(mc.bus), "machine on unknown bus " + std::to_string(mc.bus));
    require(machine_buses.insert(mc.bus).second,
            "more than one machine on bus " + std::to_string(mc.bus));
    check_machine(mc, m);
  }
  for (const auto& b : net.buses) {
    if (b.type == BusType::kPV) {
      require(machine_buses.count(b.id), "PV bus " + std::to_string(b.id) + " has no machine");
    }
    if (machine_buses.count(b.id)) {
      require(b.type != BusType::kPQ, "machine bus " + std::to_string(b.id) + " must be PV or slack");
    }
  }

  for (const auto& ld : net.loads) {
    require(ids.count(ld.bus), "load on unknown bus " + std::to_string(ld.bus));
    require(ld.active_power >= 0.0, "negative load at bus " + std::to_string(ld.bus));
  }

  require(!net.controlled_buses.empty(), "controlled bus set is empty");
  require(!net.monitored_buses.empty(), "monitored bus set is empty");
  std::set<int> ctrl;
  for (int id : net.controlled_buses) {
    require(ids.count(id), "controlled bus " + std::to_string(id) + " does not exist");
    require(ctrl.insert(id).second, "controlled bus listed twice");
    const bool has_load = std::any_of(net.loads.begin(), net.loads.end(),
                                      [id](const Load& l) { return l.bus == id; });
    require(has_load, "controlled bus " + std::to_string(id) + " carries no load");
  }
  std::set<int> mon;
  for (int id : net.monitored_buses) {
    require(ids.count(id), "monitored bus " + std::to_string(id) + " does not exist");
    require(mon.insert(id).second, "monitored bus listed twice");
  }

  const auto seen = connected_buses(net);
  for (std::size_t i = 0; i < seen.size(); ++i) {
    require(seen[i], "bus " + std::to_string(net.buses[i].id) + " is islanded");
  }
}

}  // namespace uvls::grid
