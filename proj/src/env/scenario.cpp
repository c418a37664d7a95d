#include "uvls/env/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <random>

namespace uvls::env {

using nlohmann::json;

void validate(const ScenarioRanges& r) {
  if (!(r.load_scale_min > 0.0 && r.load_scale_min <= r.load_scale_max)) {
    throw ScenarioError("load scale range is empty or non-positive");
  }
  if (!(r.duration_min > 0.0 && r.duration_min <= r.duration_max)) {
    throw ScenarioError("fault duration range is empty or non-positive");
  }
  if (r.fault_apply_time < 0.0) throw ScenarioError("fault apply time must be non-negative");
}

void validate(const ScenarioSpec& s, const grid::NetworkCase& net, const ScenarioRanges& r) {
  if (s.load_scale < r.load_scale_min || s.load_scale > r.load_scale_max) {
    throw ScenarioError("scenario " + std::to_string(s.id) + ": load_scale outside range");
  }
  if (s.fault_branch) {
    if (*s.fault_branch >= net.branches.size() || !net.branches[*s.fault_branch].in_service) {
      throw ScenarioError("scenario " + std::to_string(s.id) + ": fault branch does not exist");
    }
    if (s.fault_duration < r.duration_min || s.fault_duration > r.duration_max) {
      throw ScenarioError("scenario " + std::to_string(s.id) + ": fault duration outside range");
    }
    if (s.fault_apply_time < 0.0) {
      throw ScenarioError("scenario " + std::to_string(s.id) + ": negative fault apply time");
    }
  }
}

std::vector<std::size_t> eligible_fault_branches(const grid::NetworkCase& net) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    if (!net.branches[k].in_service) continue;
    const auto seen = grid::connected_buses(net, {k});
    if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) out.push_back(k);
  }
  return out;
}

std::vector<ScenarioSpec> generate_scenarios(const grid::NetworkCase& net, std::size_t count,
                                             std::uint64_t seed, const ScenarioRanges& ranges) {
  validate(ranges);
  const auto branches = eligible_fault_branches(net);
  if (count > 0 && branches.empty()) throw ScenarioError("case has no eligible fault branch");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> scale(ranges.load_scale_min, ranges.load_scale_max);
  std::uniform_real_distribution<double> duration(ranges.duration_min, ranges.duration_max);
  std::uniform_int_distribution<std::size_t> pick(0, branches.empty() ? 0 : branches.size() - 1);

  std::vector<ScenarioSpec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ScenarioSpec s;
    s.id = i;
    s.load_scale = scale(rng);
    s.fault_duration = duration(rng);
    s.fault_branch = branches[pick(rng)];
    s.fault_apply_time = ranges.fault_apply_time;
    s.rng_seed = rng();
    out.push_back(s);
  }
  return out;
}

json to_json(const ScenarioFile& file) {
  json doc;
  doc["format_version"] = kScenarioFormatVersion;
  doc["seed"] = file.seed;
  doc["manifest_hash"] = file.manifest_hash;
  doc["ranges"] = {{"load_scale", {file.ranges.load_scale_min, file.ranges.load_scale_max}},
                   {"fault_duration", {file.ranges.duration_min, file.ranges.duration_max}},
                   {"fault_apply_time", file.ranges.fault_apply_time}};
  doc["scenarios"] = json::array();
  for (const auto& s : file.scenarios) {
    json j{{"id", s.id},
           {"load_scale", s.load_scale},
           {"fault_duration", s.fault_duration},
           {"fault_apply_time", s.fault_apply_time},
           {"rng_seed", s.rng_seed}};
    j["fault_branch"] = s.fault_branch ? json(*s.fault_branch) : json(nullptr);
    doc["scenarios"].push_back(std::move(j));
  }
  return doc;
}

ScenarioFile scenario_file_from_json(const json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kScenarioFormatVersion) {
      throw ScenarioError("unsupported scenario format_version");
    }
    ScenarioFile f;
    f.seed = doc.value("seed", std::uint64_t{0});
    f.manifest_hash = doc.value("manifest_hash", std::string{});
    if (auto r = doc.find("ranges"); r != doc.end()) {
      f.ranges.load_scale_min = r->at("load_scale")[0].get<double>();
      f.ranges.load_scale_max = r->at("load_scale")[1].get<double>();
      f.ranges.duration_min = r->at("fault_duration")[0].get<double>();
      f.ranges.duration_max = r->at("fault_duration")[1].get<double>();
      f.ranges.fault_apply_time = r->value("fault_apply_time", 0.6);
    }
    for (const auto& j : doc.at("scenarios")) {
      ScenarioSpec s;
      s.id = j.at("id").get<std::uint64_t>();
      s.load_scale = j.at("load_scale").get<double>();
      s.fault_duration = j.value("fault_duration", 0.06);
      s.fault_apply_time = j.value("fault_apply_time", 0.6);
      s.rng_seed = j.value("rng_seed", std::uint64_t{0});
      const auto& fb = j.at("fault_branch");
      if (!fb.is_null()) s.fault_branch = fb.get<std::size_t>();
      f.scenarios.push_back(s);
    }
    return f;
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("malformed scenario document: ") + e.what());
  }
}

void save_scenarios(const ScenarioFile& file, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot write " + path.string());
  out << to_json(file).dump(1) << '\n';
}

ScenarioFile load_scenarios(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ScenarioError("scenario file is not valid JSON: " + std::string(e.what()));
  }
  return scenario_file_from_json(doc);
}

}  // namespace uvls::env
