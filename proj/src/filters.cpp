#include "mailtopics/filters.hpp"

#include <algorithm>
#include <map>

#include "mailtopics/error.hpp"
#include "mailtopics/phrases.hpp"
#include "mailtopics/utf8.hpp"

namespace mailtopics {

std::string_view to_string(Language lang) {
  switch (lang) {
    case Language::sr: return "sr";
    case Language::en: return "en";
    case Language::other: return "other";
  }
  return "other";
}

Language parse_language(std::string_view name) {
  if (name == "sr") return Language::sr;
  if (name == "en") return Language::en;
  return Language::other;
}

std::string_view label(DispositionKind kind) {
  switch (kind) {
    case DispositionKind::Process: return "Process";
    case DispositionKind::InternalCorrespondence: return "Internal Correspondence";
    case DispositionKind::SpamReplyForwardedOrEmpty: return "Spam, a reply, forwarded, or empty";
    case DispositionKind::Quarantined: return "Quarantined";
  }
  return "Process";
}

DispositionKind parse_disposition(std::string_view s) {
  for (auto k : {DispositionKind::Process, DispositionKind::InternalCorrespondence,
                 DispositionKind::SpamReplyForwardedOrEmpty, DispositionKind::Quarantined}) {
    if (s == label(k)) return k;
  }
  if (s == "process") return DispositionKind::Process;
  if (s == "internal") return DispositionKind::InternalCorrespondence;
  if (s == "spam") return DispositionKind::SpamReplyForwardedOrEmpty;
  if (s == "quarantined") return DispositionKind::Quarantined;
  throw Error("invalid_argument", "unknown disposition '" + std::string(s) + "'");
}

namespace filters {

namespace {

// Trigram frequencies over space-padded words of the normalized text.
std::map<std::string, int> trigram_counts(std::string_view text) {
  std::map<std::string, int> counts;
  const std::u32string cps = utf8::decode(textprep::normalize(text));
  size_t i = 0;
  while (i < cps.size()) {
    size_t j = cps.find(U' ', i);
    if (j == std::u32string::npos) j = cps.size();
    std::u32string word = U" " + cps.substr(i, j - i) + U" ";
    for (size_t k = 0; k + 3 <= word.size(); ++k) ++counts[utf8::encode(std::u32string_view(word).substr(k, 3))];
    i = j + 1;
  }
  return counts;
}

std::vector<std::string> ranked(const std::map<std::string, int>& counts, size_t top_n) {
  std::vector<std::pair<std::string, int>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (size_t i = 0; i < items.size() && i < top_n; ++i) out.push_back(items[i].first);
  return out;
}

}  // namespace

LangProfile build_profile(Language lang, std::string_view corpus, std::size_t top_n) {
  LangProfile p;
  p.lang = lang;
  p.trigrams = ranked(trigram_counts(corpus), top_n);
  for (size_t r = 0; r < p.trigrams.size(); ++r) p.rank.emplace(p.trigrams[r], static_cast<int>(r));
  return p;
}

std::vector<LangProfile> load_profiles(const std::filesystem::path& dir) {
  std::vector<LangProfile> out;
  for (const char* name : {"sr", "en"}) {
    const auto path = dir / (std::string(name) + ".txt");
    if (std::filesystem::exists(path)) out.push_back(build_profile(parse_language(name), read_file(path)));
  }
  if (out.size() < 2) throw Error("missing_profiles", "need sr.txt and en.txt under " + dir.string());
  return out;
}

LanguageGuess detect_language(std::string_view text, std::span<const LangProfile> profiles) {
  if (utf8::decode(textprep::normalize(text)).size() < kMinDetectChars || profiles.size() < 2) return {};
  const std::vector<std::string> doc = ranked(trigram_counts(text), kProfileSize);

  // Trigrams no profile knows add the same penalty everywhere; they carry no
  // evidence and would only dilute the margin.
  std::vector<bool> known(doc.size(), false);
  for (size_t r = 0; r < doc.size(); ++r)
    for (const auto& prof : profiles) known[r] = known[r] || prof.rank.count(doc[r]) != 0;

  std::vector<std::pair<double, size_t>> dist;
  for (size_t p = 0; p < profiles.size(); ++p) {
    const auto& prof = profiles[p];
    const double penalty = static_cast<double>(kProfileSize);
    double d = 0.0;
    for (size_t r = 0; r < doc.size(); ++r) {
      if (!known[r]) continue;
      auto it = prof.rank.find(doc[r]);
      d += it == prof.rank.end() ? penalty : std::abs(static_cast<double>(it->second) - static_cast<double>(r));
    }
    dist.emplace_back(d, p);
  }
  std::stable_sort(dist.begin(), dist.end());
  const double best = dist[0].first;
  const double second = dist[1].first;
  LanguageGuess guess;
  guess.lang = profiles[dist[0].second].lang;
  guess.confidence = second > 0.0 ? (second - best) / second : 0.0;
  return guess;
}

bool is_automated(std::string_view text, const std::vector<std::string>& automated_phrases) {
  return std::any_of(automated_phrases.begin(), automated_phrases.end(), [&](const std::string& p) {
    return !p.empty() && text.find(p) != std::string_view::npos;
  });
}

std::unordered_set<std::string> load_internal_addresses(const std::filesystem::path& path) {
  auto entries = load_phrase_pack(path);
  return {entries.begin(), entries.end()};
}

Disposition classify_disposition(const RawEmail& email, const CleanDocument& cleaned,
                                 const FilterConfig& filter_cfg, const PrepConfig& prep_cfg,
                                 std::span<const LangProfile> profiles, LanguageGuess* detected) {
  if (filter_cfg.internal_addrs.count(utf8::to_lower(email.from_addr)) != 0)
    return {DispositionKind::InternalCorrespondence, "internal_sender"};
  if (cleaned.text.empty()) return {DispositionKind::SpamReplyForwardedOrEmpty, "empty"};
  if (is_automated(cleaned.text, prep_cfg.automated_phrases))
    return {DispositionKind::SpamReplyForwardedOrEmpty, "automated"};
  const LanguageGuess guess = detect_language(cleaned.text, profiles);
  if (detected) *detected = guess;
  if (guess.lang == Language::en && guess.confidence >= filter_cfg.english_threshold)
    return {DispositionKind::SpamReplyForwardedOrEmpty, "english"};
  return {};
}

void screen_training_corpus(PrepResult& result, const PrepConfig& prep_cfg,
                            std::span<const LangProfile> profiles, double threshold) {
  std::vector<CleanDocument> kept;
  kept.reserve(result.kept.size());
  for (auto& doc : result.kept) {
    if (is_automated(doc.text, prep_cfg.automated_phrases)) {
      result.rejected.push_back({doc.email_id, RejectReason::Automated});
      continue;
    }
    const LanguageGuess guess = detect_language(doc.text, profiles);
    if (guess.lang != Language::sr && guess.confidence >= threshold) {
      result.rejected.push_back({doc.email_id, RejectReason::ForeignLanguage});
      continue;
    }
    kept.push_back(std::move(doc));
  }
  result.kept = std::move(kept);
}

}  // namespace filters
}  // namespace mailtopics
