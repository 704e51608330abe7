#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "mailtopics/config.hpp"
#include "mailtopics/embed.hpp"
#include "mailtopics/filters.hpp"
#include "mailtopics/store.hpp"
#include "mailtopics/topicmodel.hpp"

namespace mailtopics {

// Everything the assignment pipeline needs besides the model.
struct PipelineResources {
  PrepConfig prep;
  FilterConfig filter;
  std::vector<LangProfile> profiles;

  /// Phrase packs, language profiles and internal_addresses.txt from `data_dir`.
  static PipelineResources load(const std::filesystem::path& data_dir);
};

struct PipelineOutcome {
  std::string email_id;
  Disposition disposition;
  std::optional<TopicAssignment> assignment;  // set iff disposition is Process
  LanguageGuess language;
};

/// Disposition, preprocessing and topic assignment for a batch of raw
/// emails. Used by the batch service and the timing harness.
class AssignmentPipeline {
 public:
  AssignmentPipeline(std::shared_ptr<const FittedTopicModel> model, std::shared_ptr<const EmbeddingProvider> provider,
                     std::shared_ptr<const PipelineResources> resources);

  /// Per-email failures quarantine that email. Embedding transport failures
  /// propagate so the batch can be retried later.
  std::vector<PipelineOutcome> run(std::span<const RawEmail> emails) const;

  const FittedTopicModel& model() const { return *model_; }

 private:
  std::shared_ptr<const FittedTopicModel> model_;
  std::shared_ptr<const EmbeddingProvider> provider_;
  std::shared_ptr<const PipelineResources> resources_;
};

struct ServiceConfig {
  std::filesystem::path store_path = "mailtopics.db";
  std::filesystem::path model_path;
  std::filesystem::path data_dir;
  std::string embed_provider = "reference";
  std::chrono::seconds cadence{300};  // 0 disables the scheduler
  std::size_t batch_limit = 1000;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;  // empty: no auth header required
  std::filesystem::path static_dir;

  /// Reads the [service] section. Relative paths resolve against base_dir.
  static ServiceConfig from(const ConfigMap& cfg, const std::filesystem::path& base_dir = {});
  /// MAILTOPICS_STORE, MAILTOPICS_MODEL, MAILTOPICS_DATA_DIR, MAILTOPICS_PORT,
  /// MAILTOPICS_TOKEN override the file values.
  void apply_env();
};

// Raised by set_derived_map when topic ids are left without a derived label.
class IncompleteDerivedMap : public Error {
 public:
  explicit IncompleteDerivedMap(std::vector<int> uncovered);
  const std::vector<int>& uncovered() const noexcept { return uncovered_; }

 private:
  std::vector<int> uncovered_;
};

struct ServiceHooks {
  // Called after each persisted result with the running count. Throwing
  // aborts the batch, which is how tests simulate a crash.
  std::function<void(std::size_t persisted)> after_persist;
};

class TopicService {
 public:
  TopicService(std::shared_ptr<EmailStore> store, std::shared_ptr<const EmbeddingProvider> provider,
               std::shared_ptr<const PipelineResources> resources, std::filesystem::path model_path = {});

  /// Current model snapshot; null before a model is installed.
  std::shared_ptr<const FittedTopicModel> model() const;
  std::uint64_t revision() const;
  void install_model(std::shared_ptr<const FittedTopicModel> model);

  EmailStore& store() { return *store_; }
  const EmbeddingProvider& provider() const { return *provider_; }

  IngestResult ingest(std::span<const RawEmail> emails) { return store_->ingest(emails); }

  /// Processes up to `limit` oldest unprocessed emails. Throws `model_missing`
  /// without a model, `derived_map_incomplete` when the derived map is not
  /// total, and `busy` if another batch is running.
  BatchJob run_batch(std::size_t limit);

  MonthlyReport monthly_report(const std::string& month) const { return store_->monthly_report(month); }

  /// Returns the merged model without installing it.
  FittedTopicModel preview_merge(const std::vector<std::vector<int>>& groups) const;
  /// Merges and hot-swaps. Throws `conflict` when base_revision is stale or
  /// another mutation is in progress.
  std::shared_ptr<const FittedTopicModel> commit_merge(const std::vector<std::vector<int>>& groups,
                                                       std::optional<std::uint64_t> base_revision = std::nullopt);
  std::shared_ptr<const FittedTopicModel> set_label(int topic, const std::string& label);
  /// Requires a total map over {-1, ..., K-1}.
  std::shared_ptr<const FittedTopicModel> set_derived_map(const std::map<int, std::string>& derived);

  void set_hooks(ServiceHooks hooks) { hooks_ = std::move(hooks); }

 private:
  std::shared_ptr<const FittedTopicModel> require_model() const;
  std::shared_ptr<const FittedTopicModel> mutate(const std::function<FittedTopicModel(const FittedTopicModel&)>& f,
                                                 std::optional<std::uint64_t> base_revision);

  std::shared_ptr<EmailStore> store_;
  std::shared_ptr<const EmbeddingProvider> provider_;
  std::shared_ptr<const PipelineResources> resources_;
  std::filesystem::path model_path_;

  mutable std::mutex model_mu_;  // guards model_ and revision_
  std::shared_ptr<const FittedTopicModel> model_;
  std::uint64_t revision_ = 0;

  std::mutex mutate_mu_;  // serializes model mutations
  std::mutex job_mu_;     // one batch at a time
  ServiceHooks hooks_;
};

/// Runs batches at a fixed interval on a background thread.
class BatchScheduler {
 public:
  using Logger = std::function<void(const std::string&)>;
  BatchScheduler(TopicService& service, std::chrono::milliseconds interval, std::size_t limit, Logger log = {});
  ~BatchScheduler();
  BatchScheduler(const BatchScheduler&) = delete;
  BatchScheduler& operator=(const BatchScheduler&) = delete;

  std::size_t runs() const;

 private:
  void loop(std::stop_token stop);

  TopicService& service_;
  std::chrono::milliseconds interval_;
  std::size_t limit_;
  Logger log_;
  mutable std::mutex mu_;
  std::condition_variable_any cv_;
  std::size_t runs_ = 0;
  std::jthread thread_;
};

}  // namespace mailtopics
