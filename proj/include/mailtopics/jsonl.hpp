#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mailtopics/textprep.hpp"
#include "mailtopics/topicmodel.hpp"

namespace mailtopics {

// ISO-8601 UTC ("2024-05-01T08:30:00Z", offsets and fractional seconds
// accepted) or integer epoch seconds.
Timestamp parse_timestamp(const nlohmann::json& value);
std::string format_timestamp(Timestamp t);

/// Corpus line: {id, from, to, subject, body, received_at}.
RawEmail raw_email_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RawEmail& email);

nlohmann::json to_json(const CleanDocument& doc);
CleanDocument clean_document_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TopicAssignment& a);
nlohmann::json to_json(const TopicRepresentation& r);
nlohmann::json to_json(const TopicHierarchy& h);

struct JsonlError {
  std::size_t line = 0;
  std::string message;
};

/// Calls `sink` for every parsed line; malformed lines are collected, not fatal.
std::vector<JsonlError> read_jsonl(std::istream& in, const std::function<void(const nlohmann::json&)>& sink);
std::vector<nlohmann::json> read_jsonl_file(const std::filesystem::path& path);

}  // namespace mailtopics
