#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mailtopics/embed.hpp"
#include "mailtopics/linalg.hpp"
#include "mailtopics/textprep.hpp"

namespace mailtopics {

struct Vocabulary {
  std::vector<std::string> terms;  // sorted, unique
  std::vector<int> doc_freq;
  int min_df = 1;
  std::vector<std::string> stopwords;  // sorted

  int index_of(std::string_view term) const;  // -1 when absent
  void rebuild_index();

 private:
  std::unordered_map<std::string, int> index_;
};

// Class-based TF-IDF: W[c][t] = tf(t,c) * ln(1 + A / f(t)), where f(t) sums
// tf over classes and A is the mean vocabulary word count per class.
struct CTfIdfModel {
  CsrMatrix class_tf;  // K x |terms|, raw counts
  CsrMatrix weights;   // K x |terms|
  std::vector<double> corpus_tf;
  std::vector<int> class_sizes;  // documents per class
  double avg_words_per_class = 0.0;
  Vocabulary vocabulary;

  int num_classes() const { return static_cast<int>(weights.rows); }
  /// ln(1 + A / f(t)); zero for terms that occur only in outlier documents.
  double idf(int term) const;
};

struct TopicRepresentation {
  int topic_id = 0;
  std::vector<std::pair<std::string, double>> keywords;
  int size = 0;
};

namespace represent {

/// Whitespace tokens, in order.
std::vector<std::string_view> tokenize(std::string_view text);

Vocabulary build_vocabulary(std::span<const std::string> texts, const std::unordered_set<std::string>& stopwords,
                            int min_df);
Vocabulary build_vocabulary(std::span<const CleanDocument> docs, const std::unordered_set<std::string>& stopwords,
                            int min_df);

/// Label -1 documents are excluded from class statistics. Class count is
/// max(label) + 1.
CTfIdfModel fit_ctfidf(std::span<const std::string> texts, std::span<const int> labels, const Vocabulary& vocab);

/// Top n terms of a topic row by weight, ties broken by term.
TopicRepresentation topic_keywords(const CTfIdfModel& model, int topic_id, int n = 10);

/// The text treated as a single class under the fitted A and f(t).
SparseVector doc_ctfidf_vector(std::string_view text, const CTfIdfModel& model);

/// Guided modeling. Each seed's embedding is the mean of its keyword
/// embeddings. A document is pulled toward its best seed, new =
/// normalize(blend * doc + (1 - blend) * seed), when that seed beats every
/// other seed and the corpus-mean embedding in cosine similarity.
RowMatrix apply_seed_topics(const RowMatrix& doc_embeddings, const std::vector<std::vector<std::string>>& seeds,
                            const EmbeddingProvider& provider, double blend = 0.5);

}  // namespace represent
}  // namespace mailtopics
