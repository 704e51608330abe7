#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mailtopics/embed.hpp"
#include "mailtopics/filters.hpp"
#include "mailtopics/geometry.hpp"
#include "mailtopics/represent.hpp"
#include "mailtopics/textprep.hpp"

namespace mailtopics {

struct SeedTopic {
  std::string name;
  std::vector<std::string> keywords;
};

struct ModelConfig {
  std::string embed_provider = "reference";
  int reduce_out_dim = 5;
  int min_topic_size = 100;
  std::optional<int> nr_topics;
  int min_df = 20;
  int top_n_keywords = 10;
  std::uint64_t seed = 42;
  std::vector<SeedTopic> seed_topics;
  double seed_blend = 0.5;
  bool calculate_probabilities = true;
  std::vector<std::string> stopwords;
  std::string cluster_algorithm = "density";  // or "kmeans"
  std::optional<int> kmeans_k;

  void validate() const;
};

// The documents the model was fitted on, kept so that outlier reduction,
// merging and representative-document lookup can run on a loaded model.
struct TrainingCorpus {
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  RowMatrix reduced;  // one row per document
};

inline constexpr std::string_view kOutlierDerivedExample = "General problems and malfunctions";

struct FittedTopicModel {
  static constexpr int kFormatVersion = 1;

  ModelConfig config;
  ReducerModel reducer;
  ClusterResult clusters;  // labels index the training corpus
  CTfIdfModel ctfidf;
  std::vector<TopicRepresentation> representations;
  std::map<int, std::string> custom_labels;
  std::map<int, std::string> derived_map;  // keys in {-1, 0, ..., K-1}
  std::map<int, std::vector<std::string>> representative_docs;
  TrainingCorpus corpus;
  int version = kFormatVersion;

  int num_topics() const { return clusters.K; }
  /// Topic ids in {-1..K-1} without a derived label.
  std::vector<int> uncovered_topics() const;
  bool derived_map_total() const { return uncovered_topics().empty(); }
  std::vector<std::string> derived_labels() const;
};

struct TopicAssignment {
  std::string email_id;
  int model_topic = -1;
  std::optional<std::vector<double>> probabilities;
  std::string derived_label;
  bool truncated = false;
  Disposition disposition;
  bool experimental = false;
};

struct TopicHierarchy {
  struct Merge {
    int left = 0;
    int right = 0;
    double distance = 0.0;
    int node = 0;
  };
  int leaves = 0;
  std::vector<Merge> merges;
};

struct ExperimentalLabel {
  std::string label;
  bool experimental = true;
};

enum class LongEmailStrategy { MajorityDerived, MaxProbability };

namespace topicmodel {

/// embed -> optional seed blending -> reduce -> cluster -> vocabulary ->
/// c-TF-IDF -> keywords and representative documents.
FittedTopicModel fit(std::span<const CleanDocument> docs, const ModelConfig& cfg, const EmbeddingProvider& provider);

/// Reassigns each outlier to the topic whose c-TF-IDF row is most
/// cosine-similar to the document's own c-TF-IDF vector. Documents without
/// vocabulary terms stay outliers.
FittedTopicModel reduce_outliers(const FittedTopicModel& model);

TopicAssignment transform(const FittedTopicModel& model, const EmbeddingProvider& provider, const CleanDocument& doc);
std::vector<TopicAssignment> transform_batch(const FittedTopicModel& model, const EmbeddingProvider& provider,
                                             std::span<const CleanDocument> docs);

/// softmax of negative cosine distances.
std::vector<double> distance_probabilities(std::span<const double> distances);

/// Average-linkage agglomeration of topic c-TF-IDF rows under cosine distance.
TopicHierarchy hierarchy(const FittedTopicModel& model);

FittedTopicModel merge_topics(const FittedTopicModel& model, const std::vector<std::vector<int>>& groups);

/// Cuts the hierarchy to nr_topics topics by merging along it.
FittedTopicModel reduce_topics(const FittedTopicModel& model, int nr_topics);

FittedTopicModel set_custom_labels(const FittedTopicModel& model, const std::map<int, std::string>& labels);
/// Replaces the derived map. The map may be partial.
FittedTopicModel set_derived_map(const FittedTopicModel& model, const std::map<int, std::string>& derived);

std::optional<ExperimentalLabel> second_topic(const TopicAssignment& assignment, const FittedTopicModel& model);

std::vector<double> approximate_distribution(const FittedTopicModel& model, std::string_view text, int window = 4,
                                             int stride = 1);

TopicAssignment assign_long_email(const FittedTopicModel& model, const EmbeddingProvider& provider,
                                  const CleanDocument& doc, LongEmailStrategy strategy);

}  // namespace topicmodel
}  // namespace mailtopics
