#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mailtopics/textprep.hpp"

namespace synth {

// Portable uniform draws; std distributions differ across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::uint64_t next() { return gen_(); }
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

 private:
  std::mt19937_64 gen_;
};

const std::vector<std::vector<std::string>>& family_words();
const std::vector<std::string>& shared_words();

struct BlobCorpus {
  std::vector<mailtopics::CleanDocument> docs;
  std::vector<mailtopics::RawEmail> emails;
  std::vector<int> family;  // generator label per doc, -1 for noise
};

/// `per_family` documents for each of the first `families` keyword families.
/// Each document mixes 8-12 family words with 2-4 shared words. Documents
/// are interleaved across families. `noise` extra documents mix words from
/// every family and are appended with family -1.
BlobCorpus blob_corpus(int families, int per_family, std::uint64_t seed, int noise = 0);

/// Serbian-looking text of `words` words drawn from one family.
std::string family_text(int family, int words, Rng& rng);

struct ServiceCorpus {
  std::vector<mailtopics::RawEmail> emails;
  std::vector<std::string> internal_ids;
  std::vector<std::string> automated_ids;
  std::vector<std::string> english_ids;
  std::vector<std::string> empty_ids;
};

/// Mostly ordinary Serbian customer mail with planted internal, automated,
/// English and reply-only messages (each about 5% of n).
ServiceCorpus service_corpus(std::size_t n, std::uint64_t seed);

mailtopics::Timestamp at(int year, unsigned month, unsigned day, int hour = 9);

std::string random_mixed_script(Rng& rng, std::size_t max_len);

}  // namespace synth
