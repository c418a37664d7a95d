#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "uvls/grid/dynamics.hpp"
#include "uvls/grid/power_flow.hpp"
#include "uvls/harness/commands.hpp"
#include "uvls/learn/mlp.hpp"

namespace fs = std::filesystem;
using namespace uvls;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Under-voltage load shedding testbed: simulator, relay baseline and DQN agent"};
  app.require_subcommand(1);

  std::string case_path, config_path, out_dir = "run";
  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--case", case_path, "network case file (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "seed for scenario generation and training");
  app.add_option("--out", out_dir, "run directory")->capture_default_str();
  app.add_option("--config", config_path, "run configuration (JSON)");

  auto* gen = app.add_subcommand("gen-scenarios", "sample a contingency scenario pool");
  std::size_t count = 0;
  std::string gen_file;
  auto* count_opt = gen->add_option("--count", count, "number of scenarios");
  gen->add_option("--file", gen_file, "output path (default <out>/scenarios.json)");

  auto* expert = app.add_subcommand("expert", "roll out the relay and store expert transitions");
  std::string scenarios_path, expert_path, checkpoint_path;
  expert->add_option("--scenarios", scenarios_path, "scenario file (default <out>/scenarios.json)");
  expert->add_option("--file", expert_path, "snapshot path (default <out>/expert.jsonl)");

  auto* train = app.add_subcommand("train", "train the DQN agent");
  std::size_t episodes = 0;
  bool no_expert = false;
  train->add_option("--scenarios", scenarios_path, "training pool");
  train->add_option("--expert", expert_path, "expert snapshot (default <out>/expert.jsonl if present)");
  train->add_flag("--no-expert", no_expert, "train without expert experience");
  auto* episodes_opt = train->add_option("--episodes", episodes, "override the episode count");

  auto* eval = app.add_subcommand("eval", "evaluate a policy on a scenario pool");
  std::string policy = "dqn";
  std::size_t threads = 0;
  eval->add_option("--policy", policy, "dqn | relay | none")->capture_default_str();
  eval->add_option("--scenarios", scenarios_path, "test pool");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint (default <out>/checkpoint.json)");
  auto* threads_opt = eval->add_option("--threads", threads, "worker threads (0: all cores)");
  bool no_traj = false;
  eval->add_flag("--no-trajectories", no_traj, "skip voltage trajectory export");

  auto* fig = app.add_subcommand("export-fig", "export plot-ready figure data");
  std::string which = "learning_curve", input, output;
  std::size_t window = 500;
  bool svg = false;
  fig->add_option("--which", which, "learning_curve | trajectories")->capture_default_str();
  fig->add_option("--input", input, "curve CSV or voltage CSV (default <out>/curve.csv)");
  fig->add_option("--output", output, "output CSV");
  fig->add_option("--window", window, "moving-average window (episodes)")->capture_default_str();
  fig->add_flag("--svg", svg, "also write a vector-graphic rendering");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  seed_given = seed_opt->count() > 0;

  harness::CommandLog log{&std::cout, &std::cerr};
  try {
    harness::RunManifest m;
    if (!config_path.empty()) harness::load_config(m, config_path);
    if (seed_given) m.seed = seed;
    m.case_path = case_path;
    m.out_dir = out_dir;
    m.scenario_path = scenarios_path;
    m.checkpoint_path = checkpoint_path;
    if (m.case_path.empty()) throw harness::ConfigError("--case is required");
    if (!fs::exists(m.case_path)) throw harness::ConfigError("case file " + case_path + " not found");
    if (!m.scenario_path.empty() && !fs::exists(m.scenario_path)) {
      throw harness::ConfigError("scenario file " + scenarios_path + " not found");
    }

    if (*gen) {
      if (count_opt->count() > 0) m.scenarios.count = count;
      harness::cmd_gen_scenarios(m, log, gen_file);
    } else if (*expert) {
      m.expert_path = expert_path;
      harness::cmd_expert(m, log);
    } else if (*train) {
      if (!no_expert) {
        if (!expert_path.empty()) {
          if (!fs::exists(expert_path)) throw harness::ConfigError("expert snapshot " + expert_path + " not found");
          m.expert_path = expert_path;
        } else if (fs::exists(m.out_dir / harness::kExpertFile)) {
          m.expert_path = m.out_dir / harness::kExpertFile;
        }
      }
      if (episodes_opt->count() > 0) m.train.episodes = episodes;
      harness::cmd_train(m, log);
    } else if (*eval) {
      if (threads_opt->count() > 0) m.eval.threads = threads;
      if (no_traj) m.eval.trajectories = false;
      harness::cmd_eval(m, harness::method_from_string(policy), log);
    } else if (*fig) {
      harness::FigureRequest req;
      req.kind = harness::figure_from_string(which);
      req.input = input.empty() ? m.out_dir / harness::kCurveFile : fs::path(input);
      req.output = output;
      req.window = window;
      req.svg = svg;
      harness::cmd_export_fig(m, req, log);
    }
  } catch (const harness::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const env::ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const grid::CaseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const env::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const learn::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const grid::GridError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
