#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mailtopics/textprep.hpp"

namespace mailtopics {

// Phrase packs: UTF-8, one entry per line, '#' starts a comment line.
// Entries are trimmed and lowercased; blank lines are skipped.
std::vector<std::string> parse_phrase_pack(std::string_view content);
std::vector<std::string> load_phrase_pack(const std::filesystem::path& path);

// Reads closing_phrases.txt, reply_markers.txt, automated_phrases.txt and
// placeholder_tags.txt from `dir`. Missing files leave the defaults.
PrepConfig load_prep_config(const std::filesystem::path& dir, PrepConfig base = {});

std::string read_file(const std::filesystem::path& path);

}  // namespace mailtopics
