#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mailtopics/topicmodel.hpp"

namespace mailtopics {

// Flat key/value configuration read from a small TOML subset:
//   key = "string" | 123 | 4.5 | true | ["a", "b"]
//   [section]            -> following keys become "section.key"
// Files ending in .json are read as JSON objects (nested objects flatten
// the same way).
using ConfigValue = std::variant<bool, long long, double, std::string, std::vector<std::string>>;
using ConfigMap = std::map<std::string, ConfigValue, std::less<>>;

ConfigMap parse_toml_subset(std::string_view text);
ConfigMap load_config(const std::filesystem::path& path);

/// Relative file references (stopwords) resolve against `base_dir`.
ModelConfig model_config_from(const ConfigMap& cfg, const std::filesystem::path& base_dir = {});

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace mailtopics
