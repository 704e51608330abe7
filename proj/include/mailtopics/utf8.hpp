#pragma once

#include <string>
#include <string_view>

namespace mailtopics::utf8 {

// Invalid byte sequences decode to U+FFFD.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);
void append(std::string& out, char32_t cp);

bool is_letter(char32_t cp);
char32_t to_lower(char32_t cp);
bool is_upper(char32_t cp);
bool is_lower(char32_t cp);
bool is_space(char32_t cp);

// Cyrillic, Cyrillic Supplement and the Cyrillic Extended blocks.
bool is_cyrillic(char32_t cp);

std::string to_lower(std::string_view text);

}  // namespace mailtopics::utf8
