#include "mailtopics/textprep.hpp"

#include <algorithm>
#include <map>
#include <tuple>
#include <unordered_map>

#include "mailtopics/error.hpp"
#include "mailtopics/utf8.hpp"

namespace mailtopics {

void PrepConfig::validate() const {
  if (min_words < 0) throw Error("invalid_config", "min_words must be >= 0");
  if (max_tokens < 1) throw Error("invalid_config", "max_tokens must be >= 1");
}

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::TooShort: return "too_short";
    case RejectReason::Duplicate: return "duplicate";
    case RejectReason::TooLong: return "too_long";
    case RejectReason::Automated: return "automated";
    case RejectReason::ForeignLanguage: return "foreign_language";
  }
  return "unknown";
}

namespace textprep {

namespace {

struct Latin {
  const char* lower;
  const char* upper;  // spelling inside an all-caps run
  const char* title;  // spelling before a lowercase letter
};

// Serbian alphabet (30 letters) in Cyrillic order, keyed by lowercase codepoint.
// Entries beyond the Serbian set romanize common Russian, Ukrainian,
// Belarusian and Macedonian letters.
const std::map<char32_t, Latin>& latin_table() {
  static const std::map<char32_t, Latin> table = {
      {U'а', {"a", "A", "A"}},     {U'б', {"b", "B", "B"}},     {U'в', {"v", "V", "V"}},
      {U'г', {"g", "G", "G"}},     {U'д', {"d", "D", "D"}},     {U'ђ', {"đ", "Đ", "Đ"}},
      {U'е', {"e", "E", "E"}},     {U'ж', {"ž", "Ž", "Ž"}},     {U'з', {"z", "Z", "Z"}},
      {U'и', {"i", "I", "I"}},     {U'ј', {"j", "J", "J"}},     {U'к', {"k", "K", "K"}},
      {U'л', {"l", "L", "L"}},     {U'љ', {"lj", "LJ", "Lj"}},  {U'м', {"m", "M", "M"}},
      {U'н', {"n", "N", "N"}},     {U'њ', {"nj", "NJ", "Nj"}},  {U'о', {"o", "O", "O"}},
      {U'п', {"p", "P", "P"}},     {U'р', {"r", "R", "R"}},     {U'с', {"s", "S", "S"}},
      {U'т', {"t", "T", "T"}},     {U'ћ', {"ć", "Ć", "Ć"}},     {U'у', {"u", "U", "U"}},
      {U'ф', {"f", "F", "F"}},     {U'х', {"h", "H", "H"}},     {U'ц', {"c", "C", "C"}},
      {U'ч', {"č", "Č", "Č"}},     {U'џ', {"dž", "DŽ", "Dž"}},  {U'ш', {"š", "Š", "Š"}},
      // non-Serbian
      {U'й', {"j", "J", "J"}},     {U'ё', {"jo", "JO", "Jo"}},  {U'э', {"e", "E", "E"}},
      {U'ы', {"y", "Y", "Y"}},     {U'ю', {"ju", "JU", "Ju"}},  {U'я', {"ja", "JA", "Ja"}},
      {U'щ', {"šč", "ŠČ", "Šč"}},  {U'ъ', {"", "", ""}},        {U'ь', {"", "", ""}},
      {U'є', {"je", "JE", "Je"}},  {U'і', {"i", "I", "I"}},     {U'ї', {"ji", "JI", "Ji"}},
      {U'ґ', {"g", "G", "G"}},     {U'ў', {"u", "U", "U"}},     {U'ѓ', {"ǵ", "Ǵ", "Ǵ"}},
      {U'ќ', {"ḱ", "Ḱ", "Ḱ"}},     {U'ѕ', {"dz", "DZ", "Dz"}},
  };
  return table;
}

char32_t cyrillic_lower(char32_t cp) {
  if (cp >= 0x0410 && cp <= 0x042F) return cp + 0x20;
  if (cp >= 0x0400 && cp <= 0x040F) return cp + 0x50;
  return cp;
}

bool cyrillic_upper(char32_t cp) { return cp >= 0x0400 && cp <= 0x042F; }

std::u32string collapse_spaces(std::u32string_view in) {
  std::u32string out;
  out.reserve(in.size());
  bool pending = false;
  for (char32_t cp : in) {
    if (utf8::is_space(cp)) {
      pending = true;
      continue;
    }
    if (pending && !out.empty()) out.push_back(U' ');
    pending = false;
    out.push_back(cp);
  }
  return out;
}

std::string trim_right(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r'))
    s.pop_back();
  return s;
}

// Precomposes the combining marks that occur in Serbian Latin text.
char32_t compose(char32_t base, char32_t mark) {
  if (mark == 0x030C) {
    switch (base) {
      case U'c': return U'č';
      case U's': return U'š';
      case U'z': return U'ž';
      default: return 0;
    }
  }
  if (mark == 0x0301 && base == U'c') return U'ć';
  return 0;
}

bool is_combining(char32_t cp) { return cp >= 0x0300 && cp <= 0x036F; }

}  // namespace

std::string transliterate(std::string_view text) {
  const std::u32string cps = utf8::decode(text);
  const auto& table = latin_table();
  std::string out;
  out.reserve(text.size());
  for (size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (!utf8::is_cyrillic(cp)) {
      utf8::append(out, cp);
      continue;
    }
    auto it = table.find(cyrillic_lower(cp));
    if (it == table.end()) continue;  // unmapped Cyrillic letters and marks are dropped
    if (!cyrillic_upper(cp)) {
      out += it->second.lower;
      continue;
    }
    // Capital letter: decide between "LJ" and "Lj" by the neighbouring letters.
    bool all_caps = false;
    size_t j = i + 1;
    while (j < cps.size() && !utf8::is_letter(cps[j]) && !utf8::is_space(cps[j])) ++j;
    if (j < cps.size() && utf8::is_letter(cps[j])) {
      all_caps = utf8::is_upper(cps[j]);
    } else if (i > 0 && utf8::is_letter(cps[i - 1])) {
      all_caps = utf8::is_upper(cps[i - 1]);
    }
    out += all_caps ? it->second.upper : it->second.title;
  }
  return out;
}

std::string normalize(std::string_view text) {
  const std::u32string cps = utf8::decode(text);
  std::u32string out;
  out.reserve(cps.size());
  bool pending_space = false;
  for (char32_t raw : cps) {
    const char32_t cp = utf8::to_lower(raw);
    if (utf8::is_letter(cp)) {
      if (pending_space && !out.empty()) out.push_back(U' ');
      pending_space = false;
      out.push_back(cp);
    } else if (is_combining(cp)) {
      if (!pending_space && !out.empty() && out.back() != U' ') {
        if (char32_t c = compose(out.back(), cp)) out.back() = c;
      }
    } else {
      pending_space = true;
    }
  }
  return utf8::encode(out);
}

std::string concat_subject_body(const RawEmail& email) {
  if (email.subject.empty()) return email.body;
  if (email.body.empty()) return email.subject;
  return email.subject + " " + email.body;
}

std::string strip_closing(std::string_view text, const std::vector<std::string>& closing_phrases) {
  size_t cut = std::string_view::npos;
  for (const auto& phrase : closing_phrases) {
    if (phrase.empty()) continue;
    size_t pos = text.find(phrase);
    while (pos != std::string_view::npos) {
      const size_t end = pos + phrase.size();
      const bool left = pos == 0 || text[pos - 1] == ' ';
      const bool right = end == text.size() || text[end] == ' ';
      if (left && right) break;
      pos = text.find(phrase, pos + 1);
    }
    cut = std::min(cut, pos);
  }
  if (cut == std::string_view::npos) return std::string(text);
  return trim_right(std::string(text.substr(0, cut)));
}

std::string strip_placeholders(std::string_view text, const std::vector<std::string>& tags) {
  std::vector<std::u32string> lowered_tags;
  for (const auto& t : tags) {
    if (!t.empty()) lowered_tags.push_back(utf8::decode(utf8::to_lower(t)));
  }
  const std::u32string cps = utf8::decode(text);
  std::u32string out;
  out.reserve(cps.size());
  size_t i = 0;
  while (i < cps.size()) {
    if (!utf8::is_letter(cps[i])) {
      out.push_back(cps[i++]);
      continue;
    }
    size_t j = i;
    std::u32string word;
    while (j < cps.size() && utf8::is_letter(cps[j])) word.push_back(utf8::to_lower(cps[j++]));
    if (std::find(lowered_tags.begin(), lowered_tags.end(), word) != lowered_tags.end()) {
      out.push_back(U' ');
    } else {
      out.append(cps, i, j - i);
    }
    i = j;
  }
  return utf8::encode(collapse_spaces(out));
}

std::string strip_reply_forward(std::string_view text, const std::vector<std::string>& reply_markers) {
  const std::u32string cps = utf8::decode(text);
  std::u32string lowered = cps;
  for (auto& cp : lowered) cp = utf8::to_lower(cp);
  size_t cut = std::u32string::npos;
  for (const auto& marker : reply_markers) {
    if (marker.empty()) continue;
    std::u32string m = utf8::decode(marker);
    for (auto& cp : m) cp = utf8::to_lower(cp);
    cut = std::min(cut, lowered.find(m));
  }
  if (cut == std::u32string::npos) return std::string(text);
  return trim_right(utf8::encode(std::u32string_view(cps).substr(0, cut)));
}

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

namespace {

CleanDocument clean_for_training(const RawEmail& email, const PrepConfig& cfg,
                                 const TokenCounter& count_tokens) {
  CleanDocument doc;
  doc.email_id = email.id;
  std::string text = concat_subject_body(email);
  doc.applied_steps.emplace_back(kConcat);
  text = transliterate(text);
  doc.applied_steps.emplace_back(kTransliterate);
  text = normalize(text);
  doc.applied_steps.emplace_back(kNormalize);
  text = strip_closing(text, cfg.closing_phrases);
  doc.applied_steps.emplace_back(kStripClosing);
  text = strip_placeholders(text, cfg.placeholder_tags);
  doc.applied_steps.emplace_back(kStripPlaceholders);
  doc.text = std::move(text);
  doc.word_count = count_words(doc.text);
  doc.token_count = count_tokens ? count_tokens(doc.text) : doc.word_count;
  return doc;
}

}  // namespace

PrepResult preprocess_for_training(const std::vector<RawEmail>& emails, const PrepConfig& cfg,
                                   const TokenCounter& count_tokens) {
  cfg.validate();
  const auto n = static_cast<std::ptrdiff_t>(emails.size());
  std::vector<CleanDocument> cleaned(emails.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) cleaned[i] = clean_for_training(emails[i], cfg, count_tokens);

  enum class Fate { Keep, TooShort, Duplicate, TooLong };
  std::vector<Fate> fate(emails.size(), Fate::Keep);
  std::unordered_map<std::string, size_t> first_by_text;
  for (size_t i = 0; i < cleaned.size(); ++i) {
    if (cleaned[i].word_count <= static_cast<size_t>(cfg.min_words)) {
      fate[i] = Fate::TooShort;
      continue;
    }
    auto [it, inserted] = first_by_text.try_emplace(cleaned[i].text, i);
    if (inserted) continue;
    const size_t held = it->second;
    const auto key = [&](size_t k) { return std::tie(emails[k].received_at, emails[k].id); };
    if (key(i) < key(held)) {
      fate[held] = Fate::Duplicate;
      it->second = i;
    } else {
      fate[i] = Fate::Duplicate;
    }
  }
  for (size_t i = 0; i < cleaned.size(); ++i) {
    if (fate[i] == Fate::Keep && cleaned[i].token_count > static_cast<size_t>(cfg.max_tokens))
      fate[i] = Fate::TooLong;
  }

  PrepResult result;
  for (size_t i = 0; i < cleaned.size(); ++i) {
    switch (fate[i]) {
      case Fate::Keep: result.kept.push_back(std::move(cleaned[i])); break;
      case Fate::TooShort: result.rejected.push_back({emails[i].id, RejectReason::TooShort}); break;
      case Fate::Duplicate: result.rejected.push_back({emails[i].id, RejectReason::Duplicate}); break;
      case Fate::TooLong: result.rejected.push_back({emails[i].id, RejectReason::TooLong}); break;
    }
  }
  return result;
}

CleanDocument preprocess_for_inference(const RawEmail& email, const PrepConfig& cfg,
                                       const TokenCounter& count_tokens) {
  CleanDocument doc;
  doc.email_id = email.id;
  std::string text = concat_subject_body(email);
  doc.applied_steps.emplace_back(kConcat);
  text = strip_reply_forward(text, cfg.reply_markers);
  doc.applied_steps.emplace_back(kStripReplyForward);
  text = transliterate(text);
  doc.applied_steps.emplace_back(kTransliterate);
  text = normalize(text);
  doc.applied_steps.emplace_back(kNormalize);
  text = strip_closing(text, cfg.closing_phrases);
  doc.applied_steps.emplace_back(kStripClosing);
  doc.text = std::move(text);
  doc.word_count = count_words(doc.text);
  doc.token_count = count_tokens ? count_tokens(doc.text) : doc.word_count;
  return doc;
}

}  // namespace textprep
}  // namespace mailtopics
