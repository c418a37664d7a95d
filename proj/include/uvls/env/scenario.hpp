#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uvls/grid/network.hpp"

namespace uvls::env {

inline constexpr int kScenarioFormatVersion = 1;

struct ScenarioSpec {
  std::uint64_t id = 0;
  double load_scale = 1.0;
  std::optional<std::size_t> fault_branch;  // empty: no contingency (diagnostic)
  double fault_duration = 0.06;
  double fault_apply_time = 0.6;
  std::uint64_t rng_seed = 0;
};

struct ScenarioRanges {
  double load_scale_min = 0.9;
  double load_scale_max = 1.2;
  double duration_min = 0.05;
  double duration_max = 0.07;
  double fault_apply_time = 0.6;
};

// Throws ScenarioError unless ranges and the referenced branch are valid.
void validate(const ScenarioSpec& spec, const grid::NetworkCase& net,
              const ScenarioRanges& ranges = {});
void validate(const ScenarioRanges& ranges);

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// In-service branches whose outage keeps the network connected.
std::vector<std::size_t> eligible_fault_branches(const grid::NetworkCase& net);

// Deterministic per seed: load_scale and duration uniform in their ranges,
// fault branch uniform over eligible branches.
std::vector<ScenarioSpec> generate_scenarios(const grid::NetworkCase& net, std::size_t count,
                                             std::uint64_t seed, const ScenarioRanges& ranges = {});

struct ScenarioFile {
  std::uint64_t seed = 0;
  std::string manifest_hash;
  ScenarioRanges ranges;
  std::vector<ScenarioSpec> scenarios;
};

nlohmann::json to_json(const ScenarioFile& file);
ScenarioFile scenario_file_from_json(const nlohmann::json& doc);
void save_scenarios(const ScenarioFile& file, const std::filesystem::path& path);
ScenarioFile load_scenarios(const std::filesystem::path& path);

}  // namespace uvls::env
