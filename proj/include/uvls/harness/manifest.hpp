#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "uvls/env/environment.hpp"
#include "uvls/env/scenario.hpp"
#include "uvls/learn/dqn.hpp"
#include "uvls/relay/relay.hpp"

namespace uvls::harness {

// Bad configuration, missing input files or malformed documents.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull);
std::string hex64(std::uint64_t v);
std::string file_digest(const std::filesystem::path& path);

struct ScenarioGenConfig {
  std::size_t count = 60;
  env::ScenarioRanges ranges;
};

struct EvalConfig {
  std::size_t threads = 0;  // 0: hardware concurrency
  bool trajectories = true;
};

// Everything a run depends on. Paths are resolved by the caller; the hash
// covers file contents rather than their locations.
struct RunManifest {
  std::filesystem::path case_path;
  std::filesystem::path scenario_path;
  std::filesystem::path expert_path;
  std::filesystem::path checkpoint_path;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  ScenarioGenConfig scenarios;
  relay::RelayConfig relay;
  learn::TrainConfig train;
  env::EnvConfig env;
  EvalConfig eval;
};

// Reads the run configuration document. Absent sections keep defaults.
void apply_config(RunManifest& m, const nlohmann::json& doc);
void load_config(RunManifest& m, const std::filesystem::path& path);

nlohmann::json env_config_to_json(const env::EnvConfig& c);
env::EnvConfig env_config_from_json(const nlohmann::json& j, env::EnvConfig base = {});

nlohmann::json to_json(const RunManifest& m);
std::string manifest_hash(const RunManifest& m);

// `# manifest=<hash> seed=<seed>`
std::string provenance_line(const RunManifest& m);

void ensure_directory(const std::filesystem::path& dir);

}  // namespace uvls::harness
