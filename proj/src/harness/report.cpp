#include "uvls/harness/report.hpp"

#include <algorithm>
#include <atomic>
#include <istream>
#include <sstream>
#include <thread>

#include "uvls/harness/manifest.hpp"
#include "uvls/learn/dqn.hpp"

namespace uvls::harness {

using nlohmann::json;

std::string to_string(Method m) {
  switch (m) {
    case Method::kDqn:
      return "dqn";
    case Method::kRelay:
      return "relay";
    case Method::kNone:
      return "none";
  }
  return "none";
}

Method method_from_string(const std::string& s) {
  if (s == "dqn") return Method::kDqn;
  if (s == "relay") return Method::kRelay;
  if (s == "none") return Method::kNone;
  throw ConfigError("unknown policy '" + s + "' (expected dqn, relay or none)");
}

double success_rate(std::size_t n_succ, std::size_t m) {
  if (n_succ > m) throw std::invalid_argument("more successes than tests");
  return m == 0 ? 0.0 : 100.0 * static_cast<double>(n_succ) / static_cast<double>(m);
}

double remaining_at_end(const env::EpisodeResult& episode) {
  return episode.collapsed ? 0.0 : episode.final_remaining_load_pct;
}

EvalReport aggregate(Method method, std::vector<TestOutcome> tests) {
  EvalReport r;
  r.method = method;
  double q2 = 0.0;
  for (const auto& t : tests) {
    if (t.rejected) continue;
    ++r.m;
    r.n_succ += static_cast<std::size_t>(t.success);
    q2 += t.remaining_pct;
  }
  r.q1 = success_rate(r.n_succ, r.m);
  r.mean_q2 = r.m == 0 ? 0.0 : q2 / static_cast<double>(r.m);
  r.tests = std::move(tests);
  return r;
}

json to_json(const EvalReport& r) {
  json tests = json::array();
  for (const auto& t : r.tests) {
    tests.push_back({{"scenario_id", t.scenario_id},
                     {"alpha", t.success},
                     {"R", t.total_reward},
                     {"Q2", t.remaining_pct},
                     {"collapsed", t.collapsed},
                     {"rejected", t.rejected}});
  }
  return {{"method", to_string(r.method)},
          {"M", r.m},
          {"N_succ", r.n_succ},
          {"Q1", r.q1},
          {"mean_Q2", r.mean_q2},
          {"manifest_hash", r.manifest_hash},
          {"seed", r.seed},
          {"tests", tests}};
}

EvalReport eval_report_from_json(const json& j) {
  try {
    std::vector<TestOutcome> tests;
    for (const auto& t : j.at("tests")) {
      TestOutcome o;
      o.scenario_id = t.at("scenario_id").get<std::uint64_t>();
      o.success = t.at("alpha").get<int>();
      o.total_reward = t.at("R").get<double>();
      o.remaining_pct = t.at("Q2").get<double>();
      o.collapsed = t.value("collapsed", false);
      o.rejected = t.value("rejected", false);
      tests.push_back(o);
    }
    auto r = aggregate(method_from_string(j.at("method").get<std::string>()), std::move(tests));
    r.manifest_hash = j.value("manifest_hash", std::string{});
    r.seed = j.value("seed", std::uint64_t{0});
    return r;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
}

TestOutcome outcome_from_trace(std::istream& csv, std::uint64_t scenario_id) {
  TestOutcome o;
  o.scenario_id = scenario_id;
  o.success = 1;
  std::string line;
  bool header = false;
  double last_remaining = 100.0;
  while (std::getline(csv, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 5) throw ConfigError("trace row has " + std::to_string(v.size()) + " columns");
    o.total_reward += v[2];
    if (v[3] < 0.0) o.success = 0;
    if (v[3] <= -1.0) o.collapsed = true;
    last_remaining = v[4];
  }
  o.remaining_pct = o.collapsed ? 0.0 : last_remaining;
  return o;
}

namespace {

env::Policy make_policy(const PolicySource& src) {
  switch (src.method) {
    case Method::kDqn: {
      const learn::Mlp* net = src.net;
      return [net](const env::Environment&, const env::StackedState& s) {
        return learn::act(*net, s.flatten());
      };
    }
    case Method::kRelay: {
      auto agent = std::make_shared<relay::RelayAgent>(src.relay);
      return [agent](const env::Environment& e, const env::StackedState& s) { return (*agent)(e, s); };
    }
    case Method::kNone:
      break;
  }
  return [](const env::Environment&, const env::StackedState&) { return env::no_op_action(); };
}

}  // namespace

EvalRun evaluate(const grid::NetworkCase& net, const env::EnvConfig& config,
                 std::span<const env::ScenarioSpec> pool, const PolicySource& policy,
                 std::size_t threads, bool record_trajectories) {
  if (policy.method == Method::kDqn && policy.net == nullptr) {
    throw ConfigError("dqn evaluation needs a checkpoint");
  }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(pool.size(), 1));

  std::vector<TestOutcome> tests(pool.size());
  EvalRun run;
  run.episodes.resize(pool.size());
  run.clearing_times.assign(pool.size(), 0.0);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);

  auto worker = [&](std::size_t w) {
    try {
      env::Environment env(net, config);
      env.set_record_trajectory(record_trajectories);
      for (std::size_t i = next++; i < pool.size(); i = next++) {
        tests[i].scenario_id = pool[i].id;
        try {
          auto ep = env::run_episode(env, pool[i], make_policy(policy));
          tests[i].success = ep.success;
          tests[i].total_reward = ep.total_reward;
          tests[i].collapsed = ep.collapsed;
          tests[i].remaining_pct = remaining_at_end(ep);
          run.clearing_times[i] = env.clearing_time();
          run.episodes[i] = std::move(ep);
        } catch (const env::ScenarioRejected&) {
          tests[i].rejected = true;
        }
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  std::vector<std::thread> pool_threads;
  for (std::size_t w = 1; w < threads; ++w) pool_threads.emplace_back(worker, w);
  worker(0);
  for (auto& t : pool_threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  run.report = aggregate(policy.method, std::move(tests));
  return run;
}

}  // namespace uvls::harness
