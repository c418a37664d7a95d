#include "uvls/harness/commands.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

#include "uvls/grid/case_io.hpp"
#include "uvls/harness/export.hpp"

namespace uvls::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void say(const CommandLog& log, const std::string& msg) {
  if (log.info) *log.info << msg << '\n';
}

void warn(const CommandLog& log, const std::string& msg) {
  if (log.warn) *log.warn << "warning: " << msg << '\n';
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) ensure_directory(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

fs::path resolve(const fs::path& given, const fs::path& dir, const char* name) {
  return given.empty() ? dir / name : given;
}

}  // namespace

grid::NetworkCase load_run_case(const RunManifest& m) {
  if (m.case_path.empty()) throw ConfigError("no case file given (--case)");
  try {
    return grid::load_case(m.case_path);
  } catch (const grid::CaseError& e) {
    throw ConfigError(e.what());
  }
}

env::ScenarioFile load_run_scenarios(const RunManifest& m) {
  const fs::path p = resolve(m.scenario_path, m.out_dir, kScenarioFile);
  try {
    return env::load_scenarios(p);
  } catch (const env::ScenarioError& e) {
    throw ConfigError(e.what());
  }
}

fs::path cmd_gen_scenarios(const RunManifest& m, const CommandLog& log, const fs::path& out) {
  const auto net = load_run_case(m);
  env::ScenarioFile f;
  f.seed = m.seed;
  f.ranges = m.scenarios.ranges;
  try {
    f.scenarios = env::generate_scenarios(net, m.scenarios.count, m.seed, m.scenarios.ranges);
  } catch (const env::ScenarioError& e) {
    throw ConfigError(e.what());
  }
  RunManifest stamped = m;
  stamped.scenario_path.clear();
  f.manifest_hash = manifest_hash(stamped);
  const fs::path path = out.empty() ? m.out_dir / kScenarioFile : out;
  if (path.has_parent_path()) ensure_directory(path.parent_path());
  env::save_scenarios(f, path);
  say(log, "wrote " + std::to_string(f.scenarios.size()) + " scenarios to " + path.string());
  return path;
}

std::vector<learn::Transition> load_snapshot(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open replay snapshot " + path.string());
  try {
    return learn::read_transitions(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed replay snapshot " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("malformed replay snapshot " + path.string() + ": " + e.what());
  }
}

ExpertSummary cmd_expert(const RunManifest& m, const CommandLog& log) {
  const auto net = load_run_case(m);
  const auto pool = load_run_scenarios(m);
  relay::validate(m.relay);
  env::Environment env(net, m.env);
  const auto run = relay::generate_expert_transitions(env, pool.scenarios, m.relay,
                                                      m.train.expert_capacity);
  ExpertSummary s;
  s.path = resolve(m.expert_path, m.out_dir, kExpertFile);
  s.stored = run.transitions.size();
  s.capacity = m.train.expert_capacity;
  s.episodes = run.episodes.size();
  s.rejected = run.rejected.size();
  if (pool.scenarios.empty()) warn(log, "scenario file is empty; expert snapshot is empty");
  if (!run.rejected.empty()) {
    warn(log, std::to_string(run.rejected.size()) + " scenarios had no operating point and were skipped");
  }
  RunManifest stamped = m;
  stamped.expert_path.clear();
  auto out = open_out(s.path);
  out << provenance_line(stamped) << '\n';
  learn::write_transitions(out, run.transitions);
  say(log, "stored " + std::to_string(s.stored) + " of " + std::to_string(s.capacity) +
               " expert transitions from " + std::to_string(s.episodes) + " relay episodes in " +
               s.path.string());
  return s;
}

TrainSummary cmd_train(const RunManifest& m, const CommandLog& log) {
  const auto net = load_run_case(m);
  const auto pool = load_run_scenarios(m);
  if (pool.scenarios.empty()) throw ConfigError("training needs a non-empty scenario pool");
  std::vector<learn::Transition> expert;
  if (!m.expert_path.empty()) {
    expert = load_snapshot(m.expert_path);
  }
  if (expert.empty()) warn(log, "no expert transitions; training without expert experience");

  learn::TrainConfig config = m.train;
  config.seed = m.seed;
  env::Environment env(net, m.env);

  const auto t0 = std::chrono::steady_clock::now();
  TrainSummary s;
  s.result = learn::train(env, pool.scenarios, expert, config, [&](const learn::CurvePoint& p) {
    if (log.info && (p.episode + 1) % 50 == 0) {
      *log.info << "episode " << p.episode + 1 << "/" << config.episodes << " R=" << p.total_reward
                << " alpha=" << p.success << " eps=" << p.epsilon << '\n';
    }
  });
  s.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string prov = provenance_line(m);
  s.checkpoint = m.out_dir / kCheckpointFile;
  s.curve = m.out_dir / kCurveFile;
  s.summary = m.out_dir / kSummaryFile;
  ensure_directory(m.out_dir);
  learn::save_checkpoint(s.result.checkpoint, s.checkpoint);
  {
    auto out = open_out(s.curve);
    out << prov << '\n';
    write_curve_csv(out, s.result.curve);
  }
  const auto& curve = s.result.curve;
  const std::size_t fifth = curve.size() / 5;
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < fifth; ++i) {
    first += curve[i].joint_reward;
    last += curve[curve.size() - 1 - i].joint_reward;
  }
  json summary{{"manifest", to_json(m)},
               {"manifest_hash", manifest_hash(m)},
               {"seed", m.seed},
               {"episodes", curve.size()},
               {"updates", s.result.updates},
               {"rejected_scenarios", s.result.rejected},
               {"expert_transitions", expert.size()},
               {"final_epsilon", s.result.checkpoint.epsilon},
               {"wall_clock_s", s.wall_clock_s}};
  if (fifth > 0) {
    summary["joint_reward_first_fifth"] = first / static_cast<double>(fifth);
    summary["joint_reward_last_fifth"] = last / static_cast<double>(fifth);
  }
  open_out(s.summary) << summary.dump(2) << '\n';
  say(log, "trained " + std::to_string(curve.size()) + " episodes in " +
               std::to_string(s.wall_clock_s) + " s; checkpoint " + s.checkpoint.string());
  return s;
}

EvalSummary cmd_eval(const RunManifest& m, Method method, const CommandLog& log) {
  const auto net = load_run_case(m);
  const auto pool = load_run_scenarios(m);
  if (pool.scenarios.empty()) warn(log, "scenario file is empty; report has M = 0");

  std::optional<learn::Checkpoint> ckpt;
  PolicySource src;
  src.method = method;
  src.relay = m.relay;
  RunManifest stamped = m;
  if (method == Method::kDqn) {
    const fs::path p = resolve(m.checkpoint_path, m.out_dir, kCheckpointFile);
    try {
      ckpt = learn::load_checkpoint(p);
    } catch (const json::exception& e) {
      throw ConfigError("malformed checkpoint " + p.string() + ": " + e.what());
    }
    src.net = &ckpt->params;
    stamped.checkpoint_path = p;
    env::Environment probe(net, m.env);
    if (ckpt->params.input_size() != probe.state_size() ||
        ckpt->params.output_size() != probe.n_actions()) {
      throw ConfigError("checkpoint network shape does not match the case");
    }
  } else {
    relay::validate(m.relay);
    stamped.checkpoint_path.clear();
  }
  if (m.scenario_path.empty()) stamped.scenario_path = m.out_dir / kScenarioFile;
  stamped.expert_path.clear();
  stamped.train = learn::TrainConfig{};

  EvalSummary s;
  s.run = evaluate(net, m.env, pool.scenarios, src, m.eval.threads, m.eval.trajectories);
  s.run.report.manifest_hash = manifest_hash(stamped);
  s.run.report.seed = m.seed;
  s.dir = m.out_dir / ("eval_" + to_string(method));
  ensure_directory(s.dir / "traces");
  const std::string prov = "# manifest=" + s.run.report.manifest_hash + " seed=" + std::to_string(m.seed);
  open_out(s.dir / kReportFile) << to_json(s.run.report).dump(2) << '\n';
  for (std::size_t i = 0; i < pool.scenarios.size(); ++i) {
    if (s.run.report.tests[i].rejected) continue;
    const std::string id = std::to_string(pool.scenarios[i].id);
    {
      auto out = open_out(s.dir / "traces" / ("episode_" + id + ".csv"));
      out << prov << '\n';
      env::write_episode_csv(out, s.run.episodes[i]);
    }
    if (m.eval.trajectories) {
      auto out = open_out(s.dir / "traces" / ("voltages_" + id + ".csv"));
      out << prov << '\n' << "# t_clear=" << s.run.clearing_times[i] << '\n';
      env::write_voltage_csv(out, net, s.run.episodes[i], s.run.clearing_times[i], m.env.envelope);
    }
  }
  const auto& r = s.run.report;
  say(log, to_string(method) + ": M=" + std::to_string(r.m) + " N_succ=" + std::to_string(r.n_succ) +
               " Q1=" + std::to_string(r.q1) + "% mean Q2=" + std::to_string(r.mean_q2) + "%");
  return s;
}

FigureKind figure_from_string(const std::string& s) {
  if (s == "learning_curve" || s == "learning-curve") return FigureKind::kLearningCurve;
  if (s == "trajectories") return FigureKind::kTrajectories;
  throw ConfigError("unknown figure '" + s + "' (expected learning_curve or trajectories)");
}

fs::path cmd_export_fig(const RunManifest& m, const FigureRequest& req, const CommandLog& log) {
  std::ifstream in(req.input);
  if (!in) throw ConfigError("cannot open " + req.input.string());
  std::string prov;
  if (in.peek() == '#') {
    std::getline(in, prov);
    in.seekg(0);
  }
  if (prov.rfind("# manifest=", 0) != 0) prov = provenance_line(m);

  fs::path out_path = req.output;
  if (out_path.empty()) {
    out_path = m.out_dir / (req.kind == FigureKind::kLearningCurve
                                ? "fig_learning_curve.csv"
                                : "fig_trajectories_" + req.input.stem().string() + ".csv");
  }
  std::vector<Series> series;
  std::string title, xl, yl;
  {
    auto out = open_out(out_path);
    out << prov << '\n';
    if (req.kind == FigureKind::kLearningCurve) {
      const auto curve = read_curve_csv(in);
      write_learning_curve_figure(out, curve, req.window);
      Series raw{"joint reward", {}, {}}, avg{"moving average", {}, {}};
      for (const auto& p : curve) {
        raw.x.push_back(static_cast<double>(p.episode));
        raw.y.push_back(p.joint_reward);
      }
      avg.x = raw.x;
      avg.y = moving_average(raw.y, req.window);
      series = {raw, avg};
      title = "Learning curve";
      xl = "episode";
      yl = "R_k * alpha_k";
    } else {
      const auto table = read_voltage_csv(in);
      write_trajectory_figure(out, table, m.env.envelope);
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        Series sv{table.columns[c], table.t, {}};
        for (const auto& row : table.rows) sv.y.push_back(row[c]);
        series.push_back(std::move(sv));
      }
      Series env_line{"TVRC", table.t, {}};
      for (double t : table.t) env_line.y.push_back(m.env.envelope.threshold(t - table.t_clear));
      series.push_back(std::move(env_line));
      title = "Voltage magnitudes";
      xl = "t (s)";
      yl = "|V| (p.u.)";
    }
  }
  if (req.svg) {
    fs::path svg = out_path;
    svg.replace_extension(".svg");
    auto out = open_out(svg);
    out << "<!-- " << prov.substr(2) << " -->\n";
    write_svg(out, title, xl, yl, series);
  }
  say(log, "wrote " + out_path.string());
  return out_path;
}

}  // namespace uvls::harness
