#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "uvls/grid/network.hpp"

namespace uvls::grid {

inline constexpr int kCaseFormatVersion = 1;

// Case documents are JSON. Complex quantities are written as [re, im] pairs.
NetworkCase case_from_json(const nlohmann::json& doc);
nlohmann::json case_to_json(const NetworkCase& net);

// Parses and validates; throws CaseError on schema or invariant violations.
NetworkCase load_case(const std::filesystem::path& path);
void save_case(const NetworkCase& net, const std::filesystem::path& path);

}  // namespace uvls::grid
