#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mailtopics/textprep.hpp"

namespace mailtopics {

enum class Language { sr, en, other };

std::string_view to_string(Language lang);
Language parse_language(std::string_view name);

// Ranked character-trigram table (Cavnar-Trenkle). Rank 0 is the most frequent.
struct LangProfile {
  Language lang = Language::other;
  std::vector<std::string> trigrams;
  std::unordered_map<std::string, int> rank;
};

struct LanguageGuess {
  Language lang = Language::other;
  double confidence = 0.0;
};

enum class DispositionKind { Process, InternalCorrespondence, SpamReplyForwardedOrEmpty, Quarantined };

struct Disposition {
  DispositionKind kind = DispositionKind::Process;
  std::string reason;  // empty iff kind == Process
};

std::string_view label(DispositionKind kind);
DispositionKind parse_disposition(std::string_view label_or_name);

struct FilterConfig {
  double english_threshold = 0.65;
  std::unordered_set<std::string> internal_addrs;  // lowercase
};

namespace filters {

inline constexpr std::size_t kProfileSize = 1000;
inline constexpr std::size_t kMinDetectChars = 20;

LangProfile build_profile(Language lang, std::string_view corpus, std::size_t top_n = kProfileSize);

/// Builds one profile per `<lang>.txt` seed corpus found in `dir`.
std::vector<LangProfile> load_profiles(const std::filesystem::path& dir);

/// Closest profile by out-of-place distance. Confidence is the runner-up's
/// relative distance margin, (d2 - d1) / d2. Texts under 20 letters after
/// normalization yield (other, 0).
LanguageGuess detect_language(std::string_view text, std::span<const LangProfile> profiles);

bool is_automated(std::string_view text, const std::vector<std::string>& automated_phrases);

std::unordered_set<std::string> load_internal_addresses(const std::filesystem::path& path);

/// Precedence: internal sender > empty text > automated > English > Process.
Disposition classify_disposition(const RawEmail& email, const CleanDocument& cleaned,
                                 const FilterConfig& filter_cfg, const PrepConfig& prep_cfg,
                                 std::span<const LangProfile> profiles, LanguageGuess* detected = nullptr);

/// Corpus-level filtering after training preprocessing: drops automated mail
/// and mail confidently detected as a language other than Serbian.
void screen_training_corpus(PrepResult& result, const PrepConfig& prep_cfg,
                            std::span<const LangProfile> profiles, double threshold = 0.65);

}  // namespace filters
}  // namespace mailtopics
