#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "support/fixtures.hpp"
#include "uvls/env/environment.hpp"
#include "uvls/env/mdp.hpp"
#include "uvls/env/scenario.hpp"
#include "uvls/env/tvrc.hpp"

using namespace uvls;
using namespace uvls::env;

namespace {

ScenarioSpec stressed() { return load_scenarios(fixtures::stressed_path()).scenarios.at(0); }

ScenarioSpec healthy() {
  ScenarioSpec s;
  s.id = 2;
  s.load_scale = 1.0;
  return s;
}

LoadAccounting equal_loads(std::vector<double> shed) {
  LoadAccounting acc;
  acc.before_action.assign(shed.size(), 1.0);
  acc.shed = std::move(shed);
  acc.initial_total = static_cast<double>(acc.before_action.size());
  return acc;
}

}  // namespace

TEST_CASE("envelope thresholds") {
  CHECK(tvrc_threshold(0.2) == 0.7);
  CHECK(tvrc_threshold(1.0) == 0.9);
  CHECK(tvrc_threshold(5.0) == 0.95);
  CHECK(tvrc_threshold(0.0) == 0.7);
  CHECK(tvrc_threshold(0.33) == 0.8);
  CHECK(tvrc_threshold(0.5) == 0.9);
  CHECK(tvrc_threshold(1.5) == 0.95);
  CHECK(tvrc_threshold(-0.1) == 0.7);
}

TEST_CASE("envelope is nondecreasing and takes exactly four values") {
  std::set<double> seen;
  double prev = 0.0;
  for (int k = 0; k <= 20000; ++k) {
    const double v = tvrc_threshold(k * 1e-3);
    CHECK(v >= prev);
    prev = v;
    seen.insert(v);
  }
  CHECK(seen == std::set<double>{0.7, 0.8, 0.9, 0.95});
}

TEST_CASE("deltas against the envelope") {
  const std::vector<double> v{0.85};
  CHECK(compute_deltas(v, 1.4, 1.0).deltas[0] == doctest::Approx(0.05));
  const std::vector<double> at{0.9};
  CHECK(compute_deltas(at, 2.0, 1.0).deltas[0] == 0.0);
  CHECK(compute_deltas(at, 3.0, 1.0).deltas[0] == doctest::Approx(-0.05));
}

TEST_CASE("action decoding") {
  CHECK(decode_action({0}, 4) == std::vector<double>{0, 0, 0, 0});
  CHECK(decode_action({9}, 4) == std::vector<double>{0.1, 0, 0, 0.1});
  CHECK(decode_action({15}, 4) == std::vector<double>{0.1, 0.1, 0.1, 0.1});
  CHECK_THROWS_AS(decode_action({16}, 4), UsageError);
}

TEST_CASE("action encoding is a bijection") {
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::uint32_t a = 0; a < action_count(n); ++a) {
      const auto u = decode_action({a}, n);
      CHECK(encode_action(u).index == a);
    }
  }
  const std::vector<double> bad{0.2};
  CHECK_THROWS_AS(encode_action(bad), UsageError);
}

TEST_CASE("reward examples") {
  Observation viol{0.0, {-0.05, 0.02, -0.01}};
  CHECK(reward(viol, equal_loads({0, 0, 0, 0})) == doctest::Approx(-6.0));
  Observation ok{0.0, {0.0, 0.1, 0.2}};
  CHECK(reward(ok, equal_loads({0, 0, 0, 0})) == doctest::Approx(100.0));
  CHECK(reward(ok, equal_loads({0.1, 0, 0, 0})) == doctest::Approx(97.5));
}

TEST_CASE("reward sign law over random inputs") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-0.3, 0.3), p(0.0, 2.0), f(0.0, 1.0);
  std::bernoulli_distribution all_ok(0.5);
  for (int k = 0; k < 10000; ++k) {
    Observation obs;
    const bool ok = all_ok(rng);
    for (int j = 0; j < 12; ++j) obs.deltas.push_back(ok ? std::abs(d(rng)) : d(rng));
    LoadAccounting acc;
    for (int i = 0; i < 4; ++i) {
      acc.before_action.push_back(p(rng));
      acc.shed.push_back(acc.before_action.back() * f(rng) * 0.1);
    }
    acc.initial_total = 8.0;
    const double r = reward(obs, acc);
    const bool nonneg = std::all_of(obs.deltas.begin(), obs.deltas.end(), [](double x) { return x >= 0; });
    CHECK((r >= 0.0) == nonneg);
  }
}

TEST_CASE("success flag") {
  std::vector<StepViolation> clean{{0.1, false}, {0.0, false}};
  CHECK(success_flag(clean) == 1);
  std::vector<StepViolation> dip{{0.1, false}, {-0.01, false}, {0.2, false}};
  CHECK(success_flag(dip) == 0);
  std::vector<StepViolation> collapse{{0.1, false}, {-1.0, true}};
  CHECK(success_flag(collapse) == 0);
}

TEST_CASE("stack keeps the most recent frames, oldest first") {
  StackedState st(3, Observation{0.0, {1.0, 2.0}});
  CHECK(st.flatten() == std::vector<double>{1, 2, 1, 2, 1, 2});
  st.push(Observation{1.0, {3.0, 4.0}});
  st.push(Observation{2.0, {5.0, 6.0}});
  CHECK(st.flatten() == std::vector<double>{1, 2, 3, 4, 5, 6});
  st.push(Observation{3.0, {7.0, 8.0}});
  CHECK(st.flatten() == std::vector<double>{3, 4, 5, 6, 7, 8});
  CHECK(st.depth() == 3);
}

TEST_CASE("scenario generation ranges and determinism") {
  const auto net = fixtures::two_area();
  const auto a = generate_scenarios(net, 500, 42);
  const auto b = generate_scenarios(net, 500, 42);
  const auto eligible = eligible_fault_branches(net);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].load_scale >= 0.9);
    CHECK(a[i].load_scale <= 1.2);
    CHECK(a[i].fault_duration >= 0.05);
    CHECK(a[i].fault_duration <= 0.07);
    CHECK(std::find(eligible.begin(), eligible.end(), *a[i].fault_branch) != eligible.end());
    CHECK(a[i].load_scale == b[i].load_scale);
    CHECK(a[i].fault_branch == b[i].fault_branch);
  }
  CHECK(generate_scenarios(net, 0, 1).empty());
  ScenarioFile f{42, "h", {}, a};
  const auto back = scenario_file_from_json(to_json(f));
  CHECK(to_json(back) == to_json(f));
}

TEST_CASE("islanding branches are not eligible") {
  const auto net = fixtures::two_area();
  const auto eligible = eligible_fault_branches(net);
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto seen = grid::connected_buses(net, {k});
    const bool keeps = std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
    CHECK(keeps == (std::find(eligible.begin(), eligible.end(), k) != eligible.end()));
  }
}

TEST_CASE("healthy diagnostic reset: all deltas non-negative, 15 instants, +100 per no-op") {
  Environment env(fixtures::two_area());
  const auto s = env.reset(healthy());
  for (double d : s.flatten()) CHECK(d >= 0.0);
  CHECK(env.action_instants() == 15);
  CHECK(env.state_size() == 120);
  CHECK(env.n_actions() == 16);
  auto r = env.step(no_op_action());
  CHECK(r.reward == doctest::Approx(100.0));
  CHECK_FALSE(r.terminal);
}

TEST_CASE("stressed reset: depressed start, violation once the 0.9 stage applies") {
  Environment env(fixtures::two_area());
  const auto s = env.reset(stressed());
  CHECK(env.action_instants() == 14);
  // First instant sits 0.34 s after clearing, under the 0.8 stage.
  const auto& first = s.frames().back();
  CHECK(*std::min_element(first.deltas.begin(), first.deltas.end()) + 0.8 < 0.9);
  const auto next = env.step(no_op_action());
  const auto& obs = next.state.frames().back();
  CHECK(*std::min_element(obs.deltas.begin(), obs.deltas.end()) < 0.0);
  CHECK(next.reward < 0.0);
}

TEST_CASE("infeasible loading is rejected; bad specs are errors") {
  Environment env(fixtures::two_area());
  ScenarioSpec s = healthy();
  s.load_scale = 5.0;
  CHECK_THROWS_AS(env.reset(s), ScenarioRejected);
  s.load_scale = -1.0;
  CHECK_THROWS_AS(env.reset(s), ScenarioError);
  s = stressed();
  s.fault_branch = 999;
  CHECK_THROWS_AS(env.reset(s), ScenarioError);
}

TEST_CASE("step after the horizon is a usage error; last step is terminal") {
  Environment env(fixtures::two_area());
  env.reset(healthy());
  StepResult r;
  for (std::size_t k = 0; k < env.action_instants(); ++k) {
    CHECK_FALSE(env.terminal());
    r = env.step(no_op_action());
  }
  CHECK(r.terminal);
  CHECK_THROWS_AS(env.step(no_op_action()), UsageError);
}

TEST_CASE("all-shed every step leaves 0.9^Nt of the controllable load") {
  Environment env(fixtures::two_area());
  const auto ep = run_episode(env, healthy(), [](const Environment& e, const StackedState&) {
    return all_shed_action(e.n_controlled());
  });
  CHECK(ep.steps.size() == 15);
  CHECK(ep.final_remaining_load_pct == doctest::Approx(100.0 * std::pow(0.9, 15)).epsilon(1e-9));
}

TEST_CASE("episode reward is additive and episodes are deterministic") {
  Environment env(fixtures::two_area());
  auto policy = [](const Environment&, const StackedState& s) {
    const auto f = s.flatten();
    return *std::min_element(f.begin(), f.end()) < 0.0 ? ActionIndex{12} : no_op_action();
  };
  const auto a = run_episode(env, stressed(), policy);
  const auto b = run_episode(env, stressed(), policy);
  double sum = 0.0;
  for (const auto& s : a.steps) sum += s.reward;
  CHECK(a.total_reward == sum);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    CHECK(a.steps[k].reward == b.steps[k].reward);
    CHECK(a.steps[k].action == b.steps[k].action);
  }
  double prev = 100.0;
  for (const auto& s : a.steps) {
    CHECK(s.remaining_load_pct <= prev);
    prev = s.remaining_load_pct;
  }
}

TEST_CASE("a collapse ends the episode with the worst violation reward") {
  Environment env(fixtures::two_area());
  const auto ep = run_episode(env, stressed(), [](const Environment&, const StackedState&) {
    return no_op_action();
  });
  REQUIRE(ep.collapsed);
  CHECK(ep.success == 0);
  CHECK(ep.steps.back().collapsed);
  CHECK(ep.steps.back().reward == -100.0 * 12);
  CHECK(ep.steps.back().min_delta == -1.0);
}

TEST_CASE("episode CSV header") {
  Environment env(fixtures::two_area());
  const auto ep = run_episode(env, healthy(), [](const Environment&, const StackedState&) {
    return no_op_action();
  });
  std::ostringstream out;
  write_episode_csv(out, ep);
  CHECK(out.str().rfind("t,action_index,r_t,min_delta,remaining_load_pct\n", 0) == 0);
}
