#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mailtopics/service.hpp"

namespace mailtopics {

struct GoldLabel {
  std::string email_id;
  std::set<std::string> topics;  // non-empty
  std::optional<std::string> dominant;  // member of topics when set
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvaluationReport {
  std::size_t items = 0;
  double accuracy = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  std::map<std::string, ClassMetrics> per_class;
  // confusion[effective gold][prediction]
  std::map<std::string, std::map<std::string, std::size_t>> confusion;
};

struct BatchTiming {
  std::size_t size = 0;
  std::vector<double> wall_seconds;  // one per run
  double min_seconds_per_email = 0.0;
  double max_seconds_per_email = 0.0;
  double mean_seconds_per_email = 0.0;
};

struct TimingReport {
  std::vector<BatchTiming> batches;
  std::size_t total_emails = 0;
  double total_wall_seconds = 0.0;
  double weighted_average_seconds_per_email = 0.0;  // total wall / total emails
};

namespace evalkit {

/// The class an item counts toward in per-class metrics: the dominant label
/// when present, else the prediction when it is one of the topics, else the
/// lexicographically smallest topic.
std::string effective_gold(const GoldLabel& gold, const std::string& prediction);

/// An item is correct iff it matches the dominant label, or any topic when
/// no label dominates. Throws `missing_predictions` listing absent ids.
EvaluationReport score(const std::map<std::string, std::string>& predictions, std::span<const GoldLabel> gold);

/// Lines of {email_id, topics: [...], dominant?}.
std::vector<GoldLabel> read_gold(const std::filesystem::path& path);
GoldLabel gold_from_json(const nlohmann::json& j);
/// Lines of {email_id, derived_label}.
std::map<std::string, std::string> read_predictions(const std::filesystem::path& path);

nlohmann::json to_json(const EvaluationReport& report);
/// Metric/Result block followed by the per-class breakdown.
std::string format_table(const EvaluationReport& report);

using BatchRunner = std::function<void(std::span<const RawEmail>)>;
using Clock = std::function<double()>;  // monotonic seconds

inline const std::vector<std::size_t> kDefaultBatchSizes{100, 1000, 10000};

/// Times `run` on the first `size` emails of the corpus, `runs` times per
/// size, after one untimed warm-up call. Throws `insufficient_data` when the
/// corpus is smaller than the largest size.
TimingReport time_batches(const BatchRunner& run, std::span<const RawEmail> corpus,
                          const std::vector<std::size_t>& sizes = kDefaultBatchSizes, int runs = 3,
                          const Clock& clock = {});

/// Times the full assignment pipeline.
TimingReport time_batches(const AssignmentPipeline& pipeline, std::span<const RawEmail> corpus,
                          const std::vector<std::size_t>& sizes = kDefaultBatchSizes, int runs = 3);

nlohmann::json to_json(const TimingReport& report);
std::string format_table(const TimingReport& report);

}  // namespace evalkit
}  // namespace mailtopics
