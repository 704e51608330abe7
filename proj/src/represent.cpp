#include "mailtopics/represent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "mailtopics/error.hpp"

namespace mailtopics {

int Vocabulary::index_of(std::string_view term) const {
  const auto it = index_.find(std::string(term));
  return it == index_.end() ? -1 : it->second;
}

void Vocabulary::rebuild_index() {
  index_.clear();
  for (size_t i = 0; i < terms.size(); ++i) index_.emplace(terms[i], static_cast<int>(i));
}

double CTfIdfModel::idf(int term) const {
  const double f = corpus_tf[term];
  return f > 0.0 ? std::log(1.0 + avg_words_per_class / f) : 0.0;
}

namespace represent {

std::vector<std::string_view> tokenize(std::string_view text) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r')) ++i;
    size_t j = i;
    while (j < text.size() && !(text[j] == ' ' || text[j] == '\t' || text[j] == '\n' || text[j] == '\r')) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

Vocabulary build_vocabulary(std::span<const std::string> texts, const std::unordered_set<std::string>& stopwords,
                            int min_df) {
  if (texts.empty()) throw Error("empty_input", "no documents for vocabulary");
  std::map<std::string, int, std::less<>> df;
  for (const auto& text : texts) {
    std::set<std::string_view> seen;
    for (auto tok : tokenize(text)) seen.insert(tok);
    for (auto tok : seen) ++df[std::string(tok)];
  }
  Vocabulary v;
  v.min_df = min_df;
  v.stopwords.assign(stopwords.begin(), stopwords.end());
  std::sort(v.stopwords.begin(), v.stopwords.end());
  for (const auto& [term, count] : df) {
    if (count < min_df || stopwords.count(term) != 0) continue;
    v.terms.push_back(term);
    v.doc_freq.push_back(count);
  }
  if (v.terms.empty())
    throw Error("vocabulary_empty", "no term reaches min_df=" + std::to_string(min_df) + " outside the stopword list");
  v.rebuild_index();
  return v;
}

Vocabulary build_vocabulary(std::span<const CleanDocument> docs, const std::unordered_set<std::string>& stopwords,
                            int min_df) {
  std::vector<std::string> texts;
  texts.reserve(docs.size());
  for (const auto& d : docs) texts.push_back(d.text);
  return build_vocabulary(texts, stopwords, min_df);
}

CTfIdfModel fit_ctfidf(std::span<const std::string> texts, std::span<const int> labels, const Vocabulary& vocab) {
  if (texts.size() != labels.size()) throw Error("invalid_argument", "texts and labels differ in length");
  int K = 0;
  for (int l : labels) {
    if (l < -1) throw Error("invalid_argument", "label below -1");
    K = std::max(K, l + 1);
  }
  if (K == 0) throw Error("no_classes", "every document is an outlier");

  std::vector<std::map<int, double>> counts(static_cast<size_t>(K));
  CTfIdfModel m;
  m.vocabulary = vocab;
  m.vocabulary.rebuild_index();
  m.class_sizes.assign(static_cast<size_t>(K), 0);
  for (size_t i = 0; i < texts.size(); ++i) {
    if (labels[i] < 0) continue;
    ++m.class_sizes[labels[i]];
    for (auto tok : tokenize(texts[i])) {
      const int t = m.vocabulary.index_of(tok);
      if (t >= 0) counts[labels[i]][t] += 1.0;
    }
  }

  const auto V = static_cast<std::int64_t>(vocab.terms.size());
  m.corpus_tf.assign(static_cast<size_t>(V), 0.0);
  double total_words = 0.0;
  m.class_tf.cols = V;
  for (const auto& row : counts) {
    SparseVector sv;
    for (const auto& [t, c] : row) {
      sv.indices.push_back(t);
      sv.values.push_back(c);
      m.corpus_tf[t] += c;
      total_words += c;
    }
    m.class_tf.push_row(sv);
  }
  m.avg_words_per_class = total_words / static_cast<double>(K);

  m.weights.cols = V;
  for (std::int64_t c = 0; c < K; ++c) {
    SparseVector sv;
    for (auto i = m.class_tf.row_ptr[c]; i < m.class_tf.row_ptr[c + 1]; ++i) {
      sv.indices.push_back(m.class_tf.col_idx[i]);
      sv.values.push_back(m.class_tf.values[i] * m.idf(m.class_tf.col_idx[i]));
    }
    m.weights.push_row(sv);
  }
  return m;
}

TopicRepresentation topic_keywords(const CTfIdfModel& model, int topic_id, int n) {
  if (topic_id < 0 || topic_id >= model.num_classes())
    throw Error("unknown_topic", "topic " + std::to_string(topic_id) + " out of range");
  const auto row = model.weights.dense_row(topic_id);
  std::vector<int> order(row.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  const auto& terms = model.vocabulary.terms;
  const auto take = std::min<size_t>(static_cast<size_t>(std::max(n, 0)), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), [&](int a, int b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return terms[a] < terms[b];
  });
  TopicRepresentation rep;
  rep.topic_id = topic_id;
  rep.size = model.class_sizes[topic_id];
  for (size_t i = 0; i < take; ++i) rep.keywords.emplace_back(terms[order[i]], row[order[i]]);
  return rep;
}

SparseVector doc_ctfidf_vector(std::string_view text, const CTfIdfModel& model) {
  std::map<int, double> tf;
  for (auto tok : tokenize(text)) {
    const int t = model.vocabulary.index_of(tok);
    if (t >= 0) tf[t] += 1.0;
  }
  SparseVector v;
  for (const auto& [t, c] : tf) {
    const double w = c * model.idf(t);
    if (w == 0.0) continue;
    v.indices.push_back(t);
    v.values.push_back(w);
  }
  return v;
}

RowMatrix apply_seed_topics(const RowMatrix& doc_embeddings, const std::vector<std::vector<std::string>>& seeds,
                            const EmbeddingProvider& provider, double blend) {
  if (blend < 0.0 || blend > 1.0) throw Error("invalid_argument", "blend must lie in [0, 1]");
  RowMatrix out = doc_embeddings;
  if (seeds.empty() || doc_embeddings.rows() == 0 || blend == 1.0) return out;

  // Row 0 is the corpus mean; a document closest to it is left alone.
  RowMatrix anchors(static_cast<Eigen::Index>(seeds.size() + 1), doc_embeddings.cols());
  anchors.row(0) = doc_embeddings.colwise().mean();
  for (size_t s = 0; s < seeds.size(); ++s) {
    if (seeds[s].empty()) throw Error("invalid_argument", "seed topic list is empty");
    const RowMatrix kw = provider.embed_batch(seeds[s]);
    anchors.row(static_cast<Eigen::Index>(s + 1)) = kw.colwise().mean();
  }

  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const Vector doc = doc_embeddings.row(i).transpose();
    Eigen::Index best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    bool unique = true;
    for (Eigen::Index a = 0; a < anchors.rows(); ++a) {
      const double sim = cosine_similarity(doc, anchors.row(a).transpose());
      if (sim > best_sim) {
        best_sim = sim;
        best = a;
        unique = true;
      } else if (sim == best_sim) {
        unique = false;
      }
    }
    if (best == 0 || !unique) continue;
    Vector mixed = blend * doc + (1.0 - blend) * anchors.row(best).transpose();
    const double norm = mixed.norm();
    if (norm > 0.0) mixed /= norm;
    out.row(i) = mixed.transpose();
  }
  return out;
}

}  // namespace represent
}  // namespace mailtopics
