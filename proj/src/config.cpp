#include "mailtopics/config.hpp"

#include <charconv>

#include "mailtopics/error.hpp"
#include "mailtopics/phrases.hpp"

namespace mailtopics {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Strips a trailing comment that is not inside a string.
std::string strip_comment(std::string_view line) {
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

std::string unquote(std::string_view v, int line_no) {
  if (v.size() < 2 || v.front() != '"' || v.back() != '"')
    throw Error("invalid_config", "line " + std::to_string(line_no) + ": expected quoted string");
  std::string out;
  for (size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] == '\\' && i + 2 < v.size()) {
      const char c = v[++i];
      out.push_back(c == 'n' ? '\n' : c == 't' ? '\t' : c);
    } else {
      out.push_back(v[i]);
    }
  }
  return out;
}

ConfigValue parse_value(const std::string& v, int line_no) {
  if (v.empty()) throw Error("invalid_config", "line " + std::to_string(line_no) + ": missing value");
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '"') return unquote(v, line_no);
  if (v.front() == '[') {
    if (v.back() != ']') throw Error("invalid_config", "line " + std::to_string(line_no) + ": unterminated array");
    std::vector<std::string> items;
    std::string inner = v.substr(1, v.size() - 2);
    size_t i = 0;
    while (i < inner.size()) {
      while (i < inner.size() && (inner[i] == ' ' || inner[i] == ',' || inner[i] == '\t')) ++i;
      if (i >= inner.size()) break;
      if (inner[i] != '"') throw Error("invalid_config", "line " + std::to_string(line_no) + ": arrays hold strings");
      size_t j = i + 1;
      while (j < inner.size() && !(inner[j] == '"' && inner[j - 1] != '\\')) ++j;
      if (j >= inner.size()) throw Error("invalid_config", "line " + std::to_string(line_no) + ": unterminated string");
      items.push_back(unquote(std::string_view(inner).substr(i, j - i + 1), line_no));
      i = j + 1;
    }
    return items;
  }
  long long iv = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), iv);
  if (ec == std::errc() && p == v.data() + v.size()) return iv;
  try {
    size_t used = 0;
    const double dv = std::stod(v, &used);
    if (used == v.size()) return dv;
  } catch (const std::exception&) {
  }
  throw Error("invalid_config", "line " + std::to_string(line_no) + ": cannot parse value '" + v + "'");
}

void flatten(const nlohmann::json& j, const std::string& prefix, ConfigMap& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    const auto& v = it.value();
    if (v.is_object()) {
      flatten(v, key, out);
    } else if (v.is_boolean()) {
      out[key] = v.get<bool>();
    } else if (v.is_number_integer()) {
      out[key] = v.get<long long>();
    } else if (v.is_number()) {
      out[key] = v.get<double>();
    } else if (v.is_string()) {
      out[key] = v.get<std::string>();
    } else if (v.is_array()) {
      out[key] = v.get<std::vector<std::string>>();
    }
  }
}

template <typename T>
const T* get(const ConfigMap& cfg, std::string_view key) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return nullptr;
  if (const T* v = std::get_if<T>(&it->second)) return v;
  throw Error("invalid_config", "config key '" + std::string(key) + "' has the wrong type");
}

int get_int(const ConfigMap& cfg, std::string_view key, int fallback) {
  const long long* v = get<long long>(cfg, key);
  return v ? static_cast<int>(*v) : fallback;
}

}  // namespace

ConfigMap parse_toml_subset(std::string_view text) {
  ConfigMap out;
  std::string section;
  int line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const std::string line = trim(strip_comment(text.substr(start, end - start)));
    start = end + 1;
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('"') == std::string::npos) {
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("invalid_config", "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    out[section.empty() ? key : section + "." + key] = parse_value(value, line_no);
  }
  return out;
}

ConfigMap load_config(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  if (path.extension() == ".json") {
    const auto j = nlohmann::json::parse(content, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error("invalid_config", "malformed JSON config " + path.string());
    ConfigMap out;
    flatten(j, "", out);
    return out;
  }
  return parse_toml_subset(content);
}

ModelConfig model_config_from(const ConfigMap& cfg, const std::filesystem::path& base_dir) {
  ModelConfig m;
  if (auto v = get<std::string>(cfg, "embed_provider")) m.embed_provider = *v;
  m.reduce_out_dim = get_int(cfg, "reduce_out_dim", m.reduce_out_dim);
  m.min_topic_size = get_int(cfg, "min_topic_size", m.min_topic_size);
  if (auto v = get<long long>(cfg, "nr_topics")) m.nr_topics = static_cast<int>(*v);
  m.min_df = get_int(cfg, "min_df", m.min_df);
  m.top_n_keywords = get_int(cfg, "top_n_keywords", m.top_n_keywords);
  if (auto v = get<long long>(cfg, "seed")) m.seed = static_cast<std::uint64_t>(*v);
  if (auto v = get<bool>(cfg, "calculate_probabilities")) m.calculate_probabilities = *v;
  if (auto v = get<std::string>(cfg, "cluster_algorithm")) m.cluster_algorithm = *v;
  if (auto v = get<long long>(cfg, "kmeans_k")) m.kmeans_k = static_cast<int>(*v);
  if (auto it = cfg.find("seed_blend"); it != cfg.end()) {
    if (const auto* d = std::get_if<double>(&it->second)) {
      m.seed_blend = *d;
    } else if (const auto* i = std::get_if<long long>(&it->second)) {
      m.seed_blend = static_cast<double>(*i);
    } else {
      throw Error("invalid_config", "seed_blend must be a number");
    }
  }
  if (auto v = get<std::string>(cfg, "stopwords")) {
    std::filesystem::path p = *v;
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    m.stopwords = load_phrase_pack(p);
  }
  if (auto v = get<std::vector<std::string>>(cfg, "extra_stopwords"))
    m.stopwords.insert(m.stopwords.end(), v->begin(), v->end());
  for (const auto& [key, value] : cfg) {
    if (key.rfind("seed_topics.", 0) != 0) continue;
    const auto* kw = std::get_if<std::vector<std::string>>(&value);
    if (!kw) throw Error("invalid_config", "seed topic '" + key + "' must be a string array");
    m.seed_topics.push_back({key.substr(12), *kw});
  }
  m.validate();
  return m;
}

nlohmann::json to_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["embed_provider"] = cfg.embed_provider;
  j["reduce_out_dim"] = cfg.reduce_out_dim;
  j["min_topic_size"] = cfg.min_topic_size;
  j["nr_topics"] = cfg.nr_topics ? nlohmann::json(*cfg.nr_topics) : nlohmann::json(nullptr);
  j["min_df"] = cfg.min_df;
  j["top_n_keywords"] = cfg.top_n_keywords;
  j["seed"] = cfg.seed;
  j["seed_blend"] = cfg.seed_blend;
  j["calculate_probabilities"] = cfg.calculate_probabilities;
  j["stopwords"] = cfg.stopwords;
  j["cluster_algorithm"] = cfg.cluster_algorithm;
  j["kmeans_k"] = cfg.kmeans_k ? nlohmann::json(*cfg.kmeans_k) : nlohmann::json(nullptr);
  j["seed_topics"] = nlohmann::json::array();
  for (const auto& s : cfg.seed_topics) j["seed_topics"].push_back({{"name", s.name}, {"keywords", s.keywords}});
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig m;
  m.embed_provider = j.at("embed_provider").get<std::string>();
  m.reduce_out_dim = j.at("reduce_out_dim").get<int>();
  m.min_topic_size = j.at("min_topic_size").get<int>();
  if (!j.at("nr_topics").is_null()) m.nr_topics = j.at("nr_topics").get<int>();
  m.min_df = j.at("min_df").get<int>();
  m.top_n_keywords = j.at("top_n_keywords").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.seed_blend = j.at("seed_blend").get<double>();
  m.calculate_probabilities = j.at("calculate_probabilities").get<bool>();
  m.stopwords = j.at("stopwords").get<std::vector<std::string>>();
  m.cluster_algorithm = j.at("cluster_algorithm").get<std::string>();
  if (!j.at("kmeans_k").is_null()) m.kmeans_k = j.at("kmeans_k").get<int>();
  for (const auto& s : j.at("seed_topics"))
    m.seed_topics.push_back({s.at("name").get<std::string>(), s.at("keywords").get<std::vector<std::string>>()});
  return m;
}

}  // namespace mailtopics
