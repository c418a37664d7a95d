#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "support/fixtures.hpp"
#include "uvls/grid/dynamics.hpp"
#include "uvls/grid/integrator.hpp"
#include "uvls/grid/power_flow.hpp"
#include "uvls/grid/ybus.hpp"

using namespace uvls::grid;

namespace {

// Independent per-element assembly: walk the branch list for every (i, j).
Eigen::MatrixXcd assemble_by_hand(const NetworkCase& net) {
  const std::size_t n = net.buses.size();
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Complex sum{0.0, 0.0};
      for (const auto& br : net.branches) {
        if (!br.in_service) continue;
        const Complex ys = 1.0 / br.series_impedance;
        const int a = net.buses[i].id, b = net.buses[j].id;
        if (i == j) {
          if (br.from_bus == a || br.to_bus == a) sum += ys + Complex(0.0, br.charging / 2.0);
        } else if ((br.from_bus == a && br.to_bus == b) || (br.from_bus == b && br.to_bus == a)) {
          sum -= ys;
        }
      }
      if (i == j) sum += net.buses[i].shunt;
      y(i, j) = sum;
    }
  }
  return y;
}

// Load-bus voltage of the two-bus case by damped fixed-point iteration on
// V = E - Z conj(S / V).
Complex two_bus_oracle(Complex s, Complex z) {
  Complex v{1.0, 0.0};
  for (int k = 0; k < 20000; ++k) {
    const Complex next = 1.0 - z * std::conj(s / v);
    v = 0.5 * v + 0.5 * next;
  }
  return v;
}

// Largest scale k with a real solution of the two-bus power balance along the
// direction (p, q): sweep, then bisect the discriminant sign change.
double nose_scale(double p, double q, Complex z) {
  auto feasible = [&](double k) {
    const double r = z.real(), x = z.imag();
    const double b = 2.0 * (r * p * k + x * q * k) - 1.0;
    return b * b - 4.0 * std::norm(z) * (p * p + q * q) * k * k >= 0.0 && b < 0.0;
  };
  double lo = 0.0, hi = 0.0;
  for (double k = 0.1; k < 1000.0; k += 0.1) {
    if (!feasible(k)) {
      hi = k;
      break;
    }
    lo = k;
  }
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

DynamicSystem system_for(const NetworkCase& net, const Initialization& init) {
  YbusOptions opts;
  opts.load_admittance = init.load_admittance;
  return DynamicSystem{&net, init.refs, NetworkSolver(net, build_ybus(net, opts), init.fixed_voltage),
                       2.0 * std::numbers::pi * net.frequency};
}

}  // namespace

TEST_CASE("single line assembles to the textbook two-bus matrix") {
  auto net = fixtures::two_bus(0.0, 0.0, 1.0 / Complex(1.0, -10.0));
  const auto y = build_ybus(net);
  CHECK(y.g(0, 0) == doctest::Approx(1.0));
  CHECK(y.g(0, 1) == doctest::Approx(-1.0));
  CHECK(y.g(1, 1) == doctest::Approx(1.0));
  CHECK(y.b(0, 0) == doctest::Approx(-10.0));
  CHECK(y.b(0, 1) == doctest::Approx(10.0));
  CHECK(y.b(1, 0) == doctest::Approx(10.0));
}

TEST_CASE("all branches out is a singular topology") {
  auto net = fixtures::two_bus(0.1, 0.0);
  net.branches[0].in_service = false;
  CHECK_THROWS_AS(build_ybus(net), SingularTopologyError);
}

TEST_CASE("ring matrix matches per-element assembly") {
  const auto net = fixtures::ring4();
  const auto y = build_ybus(net).complex();
  const auto ref = assemble_by_hand(net);
  CHECK((y - ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("random connected topologies: symmetric and equal to hand assembly") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto net = fixtures::random_connected(rng, 3 + trial % 9);
    const auto y = build_ybus(net);
    CHECK((y.g - y.g.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((y.b - y.b.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((y.complex() - assemble_by_hand(net)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("fault overlay adds the bolted shunt and a trip removes the branch") {
  const auto net = fixtures::ring4();
  YbusOptions opts;
  opts.fault = FaultOverlay{1, 2, kBoltedFaultConductance};
  const auto base = build_ybus(net);
  const auto faulted = build_ybus(net, opts);
  const std::size_t p = net.bus_index(2);
  CHECK(faulted.g(p, p) - base.g(p, p) == doctest::Approx(kBoltedFaultConductance));
  YbusOptions trip;
  trip.tripped_branches = {1};
  const auto post = build_ybus(net, trip);
  CHECK(post.at(net.bus_index(2), net.bus_index(3)) == Complex(0.0, 0.0));
}

TEST_CASE("slack-only case has a flat solution") {
  NetworkCase net;
  net.buses = {Bus{1, BusType::kSlack, {}, 1.04, 0.1}, Bus{2, BusType::kPQ, {}, 1.0, 0.0}};
  net.branches = {Branch{1, 2, {0.0, 0.1}, 0.0, true}};
  net.controlled_buses = {2};
  net.monitored_buses = {2};
  const auto pf = solve_power_flow(net);
  for (const auto& v : pf.voltage) CHECK(std::abs(v - std::polar(1.04, 0.1)) < 1e-10);
  for (const auto& s : pf.injection) CHECK(std::abs(s) < 1e-10);
}

TEST_CASE("two-bus load voltage matches the fixed-point oracle") {
  const Complex z{0.01, 0.1};
  const auto net = fixtures::two_bus(0.5, 0.1, z);
  const auto pf = solve_power_flow(net);
  const Complex oracle = two_bus_oracle({0.5, 0.1}, z);
  CHECK(std::abs(pf.voltage[1] - oracle) < 1e-9);
  CHECK(pf.mismatch < 1e-8);
}

TEST_CASE("loading past the nose point does not converge") {
  const Complex z{0.01, 0.1};
  const double k = nose_scale(0.5, 0.1, z);
  REQUIRE(k > 1.0);
  CHECK_NOTHROW(solve_power_flow(fixtures::two_bus(0.5 * 0.95 * k, 0.1 * 0.95 * k, z)));
  CHECK_THROWS_AS(solve_power_flow(fixtures::two_bus(0.5 * 2.0 * k, 0.1 * 2.0 * k, z)),
                  PowerFlowDivergence);
}

TEST_CASE("power balance holds at every bus of the bundled case") {
  const auto net = fixtures::two_area();
  const auto pf = solve_power_flow(net);
  const auto y = build_ybus(net);
  CHECK(power_mismatch(net, y, pf.voltage) < 1e-8);
}

TEST_CASE("initialization is an equilibrium") {
  for (const auto& net : {fixtures::two_area(), fixtures::omib()}) {
    const auto pf = solve_power_flow(net);
    const auto init = init_dynamic_state(net, pf);
    const auto sys = system_for(net, init);
    CHECK(state_derivative(init.state, sys).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("mechanical limit below the dispatch is an initialization error") {
  auto net = fixtures::omib();
  net.machines[0].governor.pm_max = 1.0;
  const auto pf = solve_power_flow(net);
  try {
    init_dynamic_state(net, pf);
    FAIL("expected InitializationError");
  } catch (const InitializationError& e) {
    CHECK(e.machine() == 0);
  }
}

TEST_CASE("trapezoidal corrector on x' = -x") {
  const double h = 0.01;
  IntegratorConfig cfg;
  cfg.corrector_tolerance = 1e-15;
  cfg.max_corrector_iterations = 100;
  Eigen::VectorXd x(1);
  x << 1.0;
  const auto f = [](const Eigen::VectorXd& v) -> Eigen::VectorXd { return -v; };
  const auto x1 = predictor_corrector_step(x, f(x), h, f, cfg);
  CHECK(x1(0) == doctest::Approx((1.0 - h / 2.0) / (1.0 + h / 2.0)).epsilon(1e-14));
  CHECK(x1(0) == doctest::Approx(0.99004975124).epsilon(1e-10));
}

TEST_CASE("equilibrium is a fixed point of one step") {
  const auto net = fixtures::two_area();
  const auto pf = solve_power_flow(net);
  const auto init = init_dynamic_state(net, pf);
  const auto sys = system_for(net, init);
  const auto next = step(init.state, sys, IntegratorConfig{});
  CHECK((next.pack() - init.state.pack()).lpNorm<Eigen::Infinity>() < 1e-9);
  for (std::size_t i = 0; i < next.bus_voltages.size(); ++i) {
    CHECK(std::abs(next.bus_voltages[i] - init.state.bus_voltages[i]) < 1e-9);
  }
}

TEST_CASE("halving the step quarters the error") {
  const auto net = fixtures::omib();
  auto run = [&](double h) {
    IntegratorConfig c;
    c.step = h;
    c.horizon = 2.0;
    c.corrector_tolerance = 1e-13;
    c.max_corrector_iterations = 200;
    EventSchedule ev;
    ev.sheds.push_back({0.1, 3, 0.3});
    return simulate_horizon(net, ev, c);
  };
  const double h = 0.01;
  const auto ref = run(h / 64);
  auto error = [&](double step) {
    const auto tr = run(step);
    const auto stride = static_cast<std::size_t>(std::lround(step / (h / 64)));
    double e = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      e = std::max(e, std::abs(tr[k].machines[0].delta - ref[k * stride].machines[0].delta));
    }
    return e;
  };
  const double ratio = error(h) / error(h / 2);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("empty schedule gives a flat trajectory; repeated runs are bit-identical") {
  const auto net = fixtures::two_area();
  IntegratorConfig c;
  c.horizon = 3.0;
  const auto a = simulate_horizon(net, {}, c);
  const auto b = simulate_horizon(net, {}, c);
  REQUIRE(a.size() == 301);
  double drift = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < a[k].bus_voltages.size(); ++i) {
      drift = std::max(drift, std::abs(std::abs(a[k].bus_voltages[i]) - std::abs(a[0].bus_voltages[i])));
      CHECK(a[k].bus_voltages[i] == b[k].bus_voltages[i]);
    }
  }
  CHECK(drift < 1e-6);
}

TEST_CASE("load shed arithmetic is multiplicative on the current load") {
  const auto net = fixtures::two_bus(1.0, 0.2);
  const auto pf = solve_power_flow(net);
  LoadBook book(net, pf.voltage);
  CHECK(book.apply_load_shed(2, 0.0) == 0.0);
  CHECK(book.active_power(2) == doctest::Approx(1.0));
  CHECK(book.apply_load_shed(2, 0.1) == doctest::Approx(0.1));
  CHECK(book.active_power(2) == doctest::Approx(0.9));
  book.apply_load_shed(2, 0.1);
  CHECK(book.active_power(2) == doctest::Approx(0.81));
  CHECK(book.cumulative_shed(2) == doctest::Approx(0.19));
  CHECK(book.records()[0].reactive_power() == doctest::Approx(0.2 * 0.81));
  CHECK_THROWS(book.apply_load_shed(2, 1.5));
}

TEST_CASE("shedding raises the post-clearing minimum on the bundled stressed case") {
  auto net = fixtures::two_area();
  for (auto& l : net.loads) l.active_power *= 1.2, l.reactive_power *= 1.2;
  for (auto& m : net.machines) m.p_dispatch *= 1.2;
  const std::size_t branch = 9;
  auto run = [&](bool shed) {
    EventSchedule ev;
    ev.fault = FaultEvent{branch, net.branches[branch].from_bus, 0.6, 0.66, true};
    if (shed) {
      for (int bus : net.controlled_buses) ev.sheds.push_back({0.66, bus, 0.1});
    }
    IntegratorConfig c;
    c.horizon = 5.0;
    double vmin = 1e9;
    try {
      simulate_horizon(net, ev, c, [&](const DynamicState& s) {
        if (s.t <= 0.66 + 1e-9) return;
        for (int id : net.monitored_buses) vmin = std::min(vmin, std::abs(s.bus_voltages[net.bus_index(id)]));
      });
    } catch (const VoltageCollapse&) {
      vmin = std::min(vmin, 0.0);
    }
    return vmin;
  };
  CHECK(run(true) > run(false));
}

TEST_CASE("case file round-trips and rejects islands") {
  const auto net = fixtures::two_area();
  const auto again = case_from_json(case_to_json(net));
  CHECK(case_to_json(again) == case_to_json(net));
  auto doc = case_to_json(fixtures::ring4());
  doc["buses"].push_back({{"id", 99}, {"type", "PQ"}});
  CHECK_THROWS_AS(case_from_json(doc), CaseError);
  auto dup = case_to_json(fixtures::ring4());
  dup["buses"][1]["id"] = 1;
  CHECK_THROWS_AS(case_from_json(dup), CaseError);
}
