#include "uvls/harness/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace uvls::harness {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) {
  if (path.empty()) return "";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a(ss.str()));
}

namespace {

template <class T>
void read_if(const json& j, const char* key, T& dst) {
  if (auto it = j.find(key); it != j.end()) dst = it->get<T>();
}

}  // namespace

json env_config_to_json(const env::EnvConfig& c) {
  return {{"action_interval", c.action_interval},
          {"horizon", c.horizon},
          {"stack_depth", c.stack_depth},
          {"trip_faulted_branch", c.trip_faulted_branch},
          {"step", c.integrator.step},
          {"algebraic_tolerance", c.integrator.algebraic_tolerance},
          {"max_corrector_iterations", c.integrator.max_corrector_iterations}};
}

env::EnvConfig env_config_from_json(const json& j, env::EnvConfig c) {
  read_if(j, "action_interval", c.action_interval);
  read_if(j, "horizon", c.horizon);
  read_if(j, "stack_depth", c.stack_depth);
  read_if(j, "trip_faulted_branch", c.trip_faulted_branch);
  read_if(j, "step", c.integrator.step);
  read_if(j, "algebraic_tolerance", c.integrator.algebraic_tolerance);
  read_if(j, "max_corrector_iterations", c.integrator.max_corrector_iterations);
  c.integrator.horizon = c.horizon;
  env::validate(c);
  return c;
}

void apply_config(RunManifest& m, const json& doc) {
  try {
    if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
    if (auto s = doc.find("scenarios"); s != doc.end()) {
      read_if(*s, "count", m.scenarios.count);
      if (auto r = s->find("load_scale"); r != s->end()) {
        m.scenarios.ranges.load_scale_min = r->at(0).get<double>();
        m.scenarios.ranges.load_scale_max = r->at(1).get<double>();
      }
      if (auto r = s->find("fault_duration"); r != s->end()) {
        m.scenarios.ranges.duration_min = r->at(0).get<double>();
        m.scenarios.ranges.duration_max = r->at(1).get<double>();
      }
      read_if(*s, "fault_apply_time", m.scenarios.ranges.fault_apply_time);
      env::validate(m.scenarios.ranges);
    }
    if (auto r = doc.find("relay"); r != doc.end()) {
      m.relay = relay::relay_config_from_json(*r);
      relay::validate(m.relay);
    }
    if (auto t = doc.find("train"); t != doc.end()) {
      json merged = learn::to_json(m.train);
      merged.update(*t);
      m.train = learn::train_config_from_json(merged);
      learn::validate(m.train);
    }
    if (auto e = doc.find("env"); e != doc.end()) m.env = env_config_from_json(*e, m.env);
    if (auto e = doc.find("eval"); e != doc.end()) {
      read_if(*e, "threads", m.eval.threads);
      read_if(*e, "trajectories", m.eval.trajectories);
    }
    read_if(doc, "seed", m.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  } catch (const env::UsageError& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const ConfigError*>(&e)) throw;
    throw ConfigError(std::string("configuration: ") + e.what());
  }
}

void load_config(RunManifest& m, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("configuration " + path.string() + " is not valid JSON: " + e.what());
  }
  apply_config(m, doc);
}

json to_json(const RunManifest& m) {
  return {{"case_path", m.case_path.string()},
          {"scenario_path", m.scenario_path.string()},
          {"expert_path", m.expert_path.string()},
          {"checkpoint_path", m.checkpoint_path.string()},
          {"out_dir", m.out_dir.string()},
          {"seed", m.seed},
          {"scenarios",
           {{"count", m.scenarios.count},
            {"load_scale", {m.scenarios.ranges.load_scale_min, m.scenarios.ranges.load_scale_max}},
            {"fault_duration", {m.scenarios.ranges.duration_min, m.scenarios.ranges.duration_max}},
            {"fault_apply_time", m.scenarios.ranges.fault_apply_time}}},
          {"relay", relay::to_json(m.relay)},
          {"train", learn::to_json(m.train)},
          {"env", env_config_to_json(m.env)}};
}

std::string manifest_hash(const RunManifest& m) {
  json j = to_json(m);
  j.erase("out_dir");
  j["case_path"] = file_digest(m.case_path);
  j["scenario_path"] = file_digest(m.scenario_path);
  j["expert_path"] = file_digest(m.expert_path);
  j["checkpoint_path"] = file_digest(m.checkpoint_path);
  return hex64(fnv1a(j.dump()));
}

std::string provenance_line(const RunManifest& m) {
  return "# manifest=" + manifest_hash(m) + " seed=" + std::to_string(m.seed);
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace uvls::harness
