#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "uvls/harness/manifest.hpp"
#include "uvls/harness/report.hpp"

namespace uvls::harness {

// Output file names inside the run directory.
inline constexpr const char* kScenarioFile = "scenarios.json";
inline constexpr const char* kExpertFile = "expert.jsonl";
inline constexpr const char* kCheckpointFile = "checkpoint.json";
inline constexpr const char* kCurveFile = "curve.csv";
inline constexpr const char* kSummaryFile = "summary.json";
inline constexpr const char* kReportFile = "report.json";

struct CommandLog {
  std::ostream* info = nullptr;
  std::ostream* warn = nullptr;
};

// Writes `out` (or <out_dir>/scenarios.json). Returns the written path.
std::filesystem::path cmd_gen_scenarios(const RunManifest& m, const CommandLog& log = {},
                                        const std::filesystem::path& out = {});

struct ExpertSummary {
  std::filesystem::path path;
  std::size_t stored = 0;
  std::size_t capacity = 0;
  std::size_t episodes = 0;
  std::size_t rejected = 0;
};
ExpertSummary cmd_expert(const RunManifest& m, const CommandLog& log = {});

// Snapshot records; `#` lines are provenance.
std::vector<learn::Transition> load_snapshot(const std::filesystem::path& path);

struct TrainSummary {
  std::filesystem::path checkpoint;
  std::filesystem::path curve;
  std::filesystem::path summary;
  learn::TrainResult result;
  double wall_clock_s = 0.0;
};
TrainSummary cmd_train(const RunManifest& m, const CommandLog& log = {});

// Report plus per-test traces under <out_dir>/eval_<method>/.
struct EvalSummary {
  std::filesystem::path dir;
  EvalRun run;
};
EvalSummary cmd_eval(const RunManifest& m, Method method, const CommandLog& log = {});

enum class FigureKind { kLearningCurve, kTrajectories };
FigureKind figure_from_string(const std::string& s);

struct FigureRequest {
  FigureKind kind = FigureKind::kLearningCurve;
  std::filesystem::path input;   // curve CSV, or voltage CSV
  std::filesystem::path output;  // CSV; `.svg` sibling when svg is set
  std::size_t window = 500;
  bool svg = false;
};
std::filesystem::path cmd_export_fig(const RunManifest& m, const FigureRequest& req,
                                     const CommandLog& log = {});

// Case and scenario pool referenced by the manifest.
grid::NetworkCase load_run_case(const RunManifest& m);
env::ScenarioFile load_run_scenarios(const RunManifest& m);

}  // namespace uvls::harness
