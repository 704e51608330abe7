#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace mailtopics {

using Timestamp = std::chrono::sys_seconds;

struct RawEmail {
  std::string id;
  std::string from_addr;
  std::vector<std::string> to_addrs;
  std::string subject;
  std::string body;
  Timestamp received_at{};
};

struct CleanDocument {
  std::string email_id;
  std::string text;
  std::size_t word_count = 0;
  std::size_t token_count = 0;
  std::vector<std::string> applied_steps;
};

struct PrepConfig {
  int min_words = 3;
  int max_tokens = 128;
  std::vector<std::string> closing_phrases;
  std::vector<std::string> placeholder_tags{"per", "loc", "org"};
  std::vector<std::string> automated_phrases;
  std::vector<std::string> reply_markers;

  void validate() const;
};

enum class RejectReason { TooShort, Duplicate, TooLong, Automated, ForeignLanguage };

std::string_view to_string(RejectReason reason);

struct Rejection {
  std::string email_id;
  RejectReason reason;
};

struct PrepResult {
  std::vector<CleanDocument> kept;
  std::vector<Rejection> rejected;
};

using TokenCounter = std::function<std::size_t(std::string_view)>;

namespace textprep {

// Step identifiers recorded in CleanDocument::applied_steps.
inline constexpr std::string_view kConcat = "concat_subject_body";
inline constexpr std::string_view kTransliterate = "transliterate";
inline constexpr std::string_view kNormalize = "normalize";
inline constexpr std::string_view kStripClosing = "strip_closing";
inline constexpr std::string_view kStripPlaceholders = "strip_placeholders";
inline constexpr std::string_view kStripReplyForward = "strip_reply_forward";

/// Serbian Cyrillic to Latin. Digraph letters (Љ, Њ, Џ) become title case
/// ("Lj") before a lowercase letter and full upper case ("LJ") inside an
/// all-caps run. Non-Serbian Cyrillic letters are romanized or dropped so
/// the output never contains Cyrillic codepoints.
std::string transliterate(std::string_view text);

/// Lowercases, keeps letters only, and collapses whitespace.
std::string normalize(std::string_view text);

std::string concat_subject_body(const RawEmail& email);

/// Cuts at the earliest word-bounded closing phrase. Expects lowercase text.
std::string strip_closing(std::string_view text, const std::vector<std::string>& closing_phrases);

/// Removes standalone placeholder tags (case-insensitive) and re-collapses whitespace.
std::string strip_placeholders(std::string_view text, const std::vector<std::string>& tags);

/// Cuts at the earliest reply/forward marker, matched case-insensitively.
std::string strip_reply_forward(std::string_view text, const std::vector<std::string>& reply_markers);

std::size_t count_words(std::string_view text);

PrepResult preprocess_for_training(const std::vector<RawEmail>& emails, const PrepConfig& cfg,
                                   const TokenCounter& count_tokens);

/// Inference path: concat, reply/forward strip, transliterate, normalize,
/// closing strip. Never rejects; the result may be empty.
CleanDocument preprocess_for_inference(const RawEmail& email, const PrepConfig& cfg,
                                       const TokenCounter& count_tokens = {});

}  // namespace textprep
}  // namespace mailtopics
