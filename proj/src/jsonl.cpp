#include "mailtopics/jsonl.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>

#include "mailtopics/error.hpp"

namespace mailtopics {

Timestamp parse_timestamp(const nlohmann::json& value) {
  using namespace std::chrono;
  if (value.is_number_integer()) return Timestamp(seconds(value.get<long long>()));
  if (!value.is_string()) throw Error("invalid_record", "received_at must be a string or integer");
  const std::string s = value.get<std::string>();
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &sec, &consumed) != 6 &&
      std::sscanf(s.c_str(), "%4d-%2d-%2d %2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &sec, &consumed) != 6)
    throw Error("invalid_record", "cannot parse timestamp '" + s + "'");
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) throw Error("invalid_record", "invalid timestamp '" + s + "'");
  std::string_view rest = std::string_view(s).substr(static_cast<size_t>(consumed));
  if (!rest.empty() && rest.front() == '.') {
    size_t i = 1;
    while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i]))) ++i;
    rest.remove_prefix(i);
  }
  long offset = 0;
  if (rest == "Z" || rest.empty()) {
    offset = 0;
  } else if ((rest.front() == '+' || rest.front() == '-') && rest.size() >= 6) {
    const int oh = std::stoi(std::string(rest.substr(1, 2)));
    const int om = std::stoi(std::string(rest.substr(4, 2)));
    offset = (rest.front() == '+' ? 1 : -1) * (oh * 3600L + om * 60L);
  } else {
    throw Error("invalid_record", "unsupported timezone in '" + s + "'");
  }
  return Timestamp(sys_days(ymd).time_since_epoch() + hours(h) + minutes(mi) + seconds(sec) - seconds(offset));
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto days = floor<std::chrono::days>(t);
  const year_month_day ymd{days};
  const hh_mm_ss tod{t - days};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

RawEmail raw_email_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("invalid_record", "record is not an object");
  RawEmail e;
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty())
    throw Error("invalid_record", "missing id");
  e.id = j["id"].get<std::string>();
  e.from_addr = j.value("from", "");
  if (j.contains("to")) {
    if (j["to"].is_array()) {
      e.to_addrs = j["to"].get<std::vector<std::string>>();
    } else if (j["to"].is_string()) {
      e.to_addrs = {j["to"].get<std::string>()};
    }
  }
  e.subject = j.value("subject", "");
  e.body = j.value("body", "");
  if (j.contains("received_at")) e.received_at = parse_timestamp(j["received_at"]);
  return e;
}

nlohmann::json to_json(const RawEmail& email) {
  return {{"id", email.id},           {"from", email.from_addr}, {"to", email.to_addrs},
          {"subject", email.subject}, {"body", email.body},      {"received_at", format_timestamp(email.received_at)}};
}

nlohmann::json to_json(const CleanDocument& doc) {
  return {{"email_id", doc.email_id},
          {"text", doc.text},
          {"word_count", doc.word_count},
          {"token_count", doc.token_count},
          {"applied_steps", doc.applied_steps}};
}

CleanDocument clean_document_from_json(const nlohmann::json& j) {
  CleanDocument d;
  d.email_id = j.at("email_id").get<std::string>();
  d.text = j.at("text").get<std::string>();
  d.word_count = j.value("word_count", textprep::count_words(d.text));
  d.token_count = j.value("token_count", d.word_count);
  if (j.contains("applied_steps")) d.applied_steps = j["applied_steps"].get<std::vector<std::string>>();
  return d;
}

nlohmann::json to_json(const TopicAssignment& a) {
  nlohmann::json j{{"email_id", a.email_id},
                   {"model_topic", a.model_topic},
                   {"derived_label", a.derived_label},
                   {"truncated", a.truncated},
                   {"disposition", label(a.disposition.kind)}};
  if (!a.disposition.reason.empty()) j["disposition_reason"] = a.disposition.reason;
  if (a.probabilities) j["probabilities"] = *a.probabilities;
  if (a.experimental) j["experimental"] = true;
  return j;
}

nlohmann::json to_json(const TopicRepresentation& r) {
  nlohmann::json kws = nlohmann::json::array();
  for (const auto& [term, w] : r.keywords) kws.push_back({term, w});
  return {{"topic_id", r.topic_id}, {"size", r.size}, {"keywords", kws}};
}

nlohmann::json to_json(const TopicHierarchy& h) {
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : h.merges)
    merges.push_back({{"left", m.left}, {"right", m.right}, {"distance", m.distance}, {"node", m.node}});
  return {{"leaves", h.leaves}, {"merges", merges}};
}

std::vector<JsonlError> read_jsonl(std::istream& in, const std::function<void(const nlohmann::json&)>& sink) {
  std::vector<JsonlError> errors;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      errors.push_back({line_no, "malformed JSON"});
      continue;
    }
    try {
      sink(j);
    } catch (const std::exception& e) {
      errors.push_back({line_no, e.what()});
    }
  }
  return errors;
}

std::vector<nlohmann::json> read_jsonl_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path.string());
  std::vector<nlohmann::json> out;
  const auto errors = read_jsonl(in, [&](const nlohmann::json& j) { out.push_back(j); });
  if (!errors.empty())
    throw Error("invalid_record", path.string() + ":" + std::to_string(errors.front().line) + ": " +
                                      errors.front().message);
  return out;
}

}  // namespace mailtopics
