#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uvls/env/environment.hpp"
#include "uvls/learn/mlp.hpp"
#include "uvls/relay/relay.hpp"

namespace uvls::harness {

enum class Method { kDqn, kRelay, kNone };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct TestOutcome {
  std::uint64_t scenario_id = 0;
  int success = 0;              // alpha
  double total_reward = 0.0;    // R_k
  double remaining_pct = 0.0;   // Q2 of this test
  bool collapsed = false;
  bool rejected = false;        // no operating point; excluded from M
};

struct EvalReport {
  Method method = Method::kNone;
  std::size_t m = 0;
  std::size_t n_succ = 0;
  double q1 = 0.0;
  double mean_q2 = 0.0;
  std::vector<TestOutcome> tests;  // pool order, rejected ones included
  std::string manifest_hash;
  std::uint64_t seed = 0;
};

double success_rate(std::size_t n_succ, std::size_t m);

// Load served at the end of the horizon. A collapsed episode serves none.
double remaining_at_end(const env::EpisodeResult& episode);

// Aggregates per-test outcomes into Q1 and mean Q2 over non-rejected tests.
EvalReport aggregate(Method method, std::vector<TestOutcome> tests);

nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);

// Recomputes a test outcome from an exported episode trace; a collapse row
// carries min_delta = -1.
TestOutcome outcome_from_trace(std::istream& csv, std::uint64_t scenario_id);

struct PolicySource {
  Method method = Method::kNone;
  const learn::Mlp* net = nullptr;  // kDqn
  relay::RelayConfig relay;         // kRelay
};

struct EvalRun {
  EvalReport report;
  std::vector<env::EpisodeResult> episodes;  // pool order; empty for rejected
  std::vector<double> clearing_times;
};

// Greedy rollouts over the pool, parallel across scenarios. Each worker owns
// its environment; the relay timer state is fresh per scenario.
EvalRun evaluate(const grid::NetworkCase& net, const env::EnvConfig& config,
                 std::span<const env::ScenarioSpec> pool, const PolicySource& policy,
                 std::size_t threads = 0, bool record_trajectories = false);

}  // namespace uvls::harness
