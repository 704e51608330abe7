#include "mailtopics/phrases.hpp"

#include <fstream>
#include <sstream>

#include "mailtopics/error.hpp"
#include "mailtopics/utf8.hpp"

namespace mailtopics {

namespace {

std::string trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> parse_phrase_pack(std::string_view content) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= content.size()) {
    size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string line = trim(content.substr(start, end - start));
    if (!line.empty() && line[0] != '#') out.push_back(utf8::to_lower(line));
    start = end + 1;
  }
  return out;
}

std::vector<std::string> load_phrase_pack(const std::filesystem::path& path) {
  return parse_phrase_pack(read_file(path));
}

PrepConfig load_prep_config(const std::filesystem::path& dir, PrepConfig base) {
  const auto load_if = [&](const char* name, std::vector<std::string>& target) {
    const auto p = dir / name;
    if (std::filesystem::exists(p)) target = load_phrase_pack(p);
  };
  load_if("closing_phrases.txt", base.closing_phrases);
  load_if("reply_markers.txt", base.reply_markers);
  load_if("automated_phrases.txt", base.automated_phrases);
  load_if("placeholder_tags.txt", base.placeholder_tags);
  return base;
}

}  // namespace mailtopics
