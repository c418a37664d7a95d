#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "uvls/grid/case_io.hpp"
#include "uvls/grid/simulator.hpp"

namespace fixtures {

using uvls::grid::Branch;
using uvls::grid::Bus;
using uvls::grid::BusType;
using uvls::grid::Complex;
using uvls::grid::Load;
using uvls::grid::MachineModel;
using uvls::grid::NetworkCase;

inline std::filesystem::path data_dir() { return UVLS_DATA_DIR; }
inline std::filesystem::path two_area_path() { return data_dir() / "two_area.json"; }
inline NetworkCase two_area() { return uvls::grid::load_case(two_area_path()); }
inline std::filesystem::path stressed_path() { return data_dir() / "stressed_scenario.json"; }

// Slack at 1.0 feeding one PQ load over a single line.
inline NetworkCase two_bus(double p, double q, Complex z = {0.01, 0.1}) {
  NetworkCase net;
  net.name = "two-bus";
  net.buses = {Bus{1, BusType::kSlack, {}, 1.0, 0.0}, Bus{2, BusType::kPQ, {}, 1.0, 0.0}};
  net.branches = {Branch{1, 2, z, 0.0, true}};
  net.loads = {Load{2, p, q}};
  net.controlled_buses = {2};
  net.monitored_buses = {2};
  return net;
}

// Mildly damped machine with gentle controls, so transients stay smooth and
// off every limiter.
inline MachineModel gentle_machine(int bus, double p) {
  MachineModel m;
  m.bus = bus;
  m.inertia = 4.0;
  m.damping = 1.0;
  m.p_dispatch = p;
  m.exciter.gain = 20.0;
  m.exciter.time_constant = 0.05;
  m.exciter.efd_min = -10.0;
  m.exciter.efd_max = 10.0;
  m.governor.pm_max = 10.0;
  m.pss.gain = 5.0;
  m.pss.v_min = -1.0;
  m.pss.v_max = 1.0;
  return m;
}

// One machine against an infinite bus, with a controllable load at the
// machine terminal.
inline NetworkCase omib() {
  NetworkCase net;
  net.name = "omib";
  net.buses = {Bus{1, BusType::kSlack, {}, 1.0, 0.0}, Bus{2, BusType::kPV, {}, 1.02, 0.0},
               Bus{3, BusType::kPQ, {}, 1.0, 0.0}};
  net.branches = {Branch{2, 1, {0.0, 0.25}, 0.0, true}, Branch{2, 1, {0.0, 0.25}, 0.0, true},
                  Branch{2, 3, {0.0, 0.05}, 0.0, true}};
  net.machines = {gentle_machine(2, 1.6)};
  net.loads = {Load{3, 0.8, 0.2}};
  net.controlled_buses = {3};
  net.monitored_buses = {3};
  return net;
}

// Square ring 1-2-3-4-1 plus a diagonal 1-3, with shunts and charging.
inline NetworkCase ring4() {
  NetworkCase net;
  net.name = "ring4";
  net.buses = {Bus{1, BusType::kSlack, {0.0, 0.0}, 1.0, 0.0}, Bus{2, BusType::kPQ, {0.01, 0.05}, 1.0, 0.0},
               Bus{3, BusType::kPQ, {0.0, -0.02}, 1.0, 0.0}, Bus{4, BusType::kPQ, {}, 1.0, 0.0}};
  net.branches = {Branch{1, 2, {0.02, 0.06}, 0.03, true}, Branch{2, 3, {0.05, 0.19}, 0.02, true},
                  Branch{3, 4, {0.01, 0.04}, 0.0, true}, Branch{4, 1, {0.03, 0.12}, 0.01, true},
                  Branch{1, 3, {0.04, 0.15}, 0.0, true}};
  net.loads = {Load{2, 0.2, 0.1}, Load{3, 0.3, 0.05}, Load{4, 0.1, 0.0}};
  net.controlled_buses = {2, 3};
  net.monitored_buses = {2, 3, 4};
  return net;
}

// Random connected topology: a spanning tree plus extra edges.
inline NetworkCase random_connected(std::mt19937_64& rng, int nbus) {
  NetworkCase net;
  std::uniform_real_distribution<double> r(0.005, 0.05), x(0.02, 0.3), sh(-0.05, 0.05);
  for (int i = 1; i <= nbus; ++i) {
    net.buses.push_back(Bus{i, i == 1 ? BusType::kSlack : BusType::kPQ, {sh(rng) * 0.1, sh(rng)}, 1.0, 0.0});
  }
  for (int i = 2; i <= nbus; ++i) {
    std::uniform_int_distribution<int> parent(1, i - 1);
    net.branches.push_back(Branch{parent(rng), i, {r(rng), x(rng)}, std::abs(sh(rng)), true});
  }
  std::uniform_int_distribution<int> any(1, nbus);
  for (int k = 0; k < nbus / 2; ++k) {
    int a = any(rng), b = any(rng);
    if (a != b) net.branches.push_back(Branch{a, b, {r(rng), x(rng)}, 0.0, true});
  }
  net.controlled_buses = {nbus};
  net.monitored_buses = {nbus};
  return net;
}

}  // namespace fixtures
