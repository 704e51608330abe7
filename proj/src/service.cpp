#include "mailtopics/service.hpp"

#include <cstdlib>
#include <sstream>

#include "mailtopics/artifact.hpp"
#include "mailtopics/phrases.hpp"

namespace mailtopics {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename T>
const T* lookup(const ConfigMap& cfg, std::string_view key) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return nullptr;
  if (const T* v = std::get_if<T>(&it->second)) return v;
  throw Error("invalid_config", "config key '" + std::string(key) + "' has the wrong type");
}

std::string join_ids(const std::vector<int>& ids) {
  std::string s;
  for (int id : ids) s += (s.empty() ? "" : ", ") + std::to_string(id);
  return s;
}

Timestamp now_seconds() { return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()); }

}  // namespace

PipelineResources PipelineResources::load(const std::filesystem::path& data_dir) {
  PipelineResources r;
  r.prep = load_prep_config(data_dir);
  r.profiles = filters::load_profiles(data_dir / "profiles");
  const auto internal = data_dir / "internal_addresses.txt";
  if (std::filesystem::exists(internal)) r.filter.internal_addrs = filters::load_internal_addresses(internal);
  return r;
}

AssignmentPipeline::AssignmentPipeline(std::shared_ptr<const FittedTopicModel> model,
                                       std::shared_ptr<const EmbeddingProvider> provider,
                                       std::shared_ptr<const PipelineResources> resources)
    : model_(std::move(model)), provider_(std::move(provider)), resources_(std::move(resources)) {
  if (!model_) throw Error("model_missing", "no topic model loaded");
  if (!provider_ || !resources_) throw Error("invalid_argument", "pipeline needs a provider and resources");
}

std::vector<PipelineOutcome> AssignmentPipeline::run(std::span<const RawEmail> emails) const {
  const auto& res = *resources_;
  const TokenCounter counter = [this](std::string_view t) { return provider_->count_tokens(t); };

  std::vector<PipelineOutcome> out(emails.size());
  std::vector<CleanDocument> docs(emails.size());
  std::vector<std::size_t> to_assign;
  for (std::size_t i = 0; i < emails.size(); ++i) {
    out[i].email_id = emails[i].id;
    try {
      docs[i] = textprep::preprocess_for_inference(emails[i], res.prep, counter);
      out[i].disposition =
          filters::classify_disposition(emails[i], docs[i], res.filter, res.prep, res.profiles, &out[i].language);
      if (out[i].disposition.kind == DispositionKind::Process) to_assign.push_back(i);
    } catch (const std::exception& e) {
      out[i].disposition = {DispositionKind::Quarantined, e.what()};
    }
  }

  std::vector<CleanDocument> batch;
  batch.reserve(to_assign.size());
  for (auto i : to_assign) batch.push_back(docs[i]);

  std::vector<TopicAssignment> assigned;
  bool batch_ok = true;
  try {
    assigned = topicmodel::transform_batch(*model_, *provider_, batch);
  } catch (const EmbedTransportError&) {
    throw;
  } catch (const std::exception&) {
    batch_ok = false;
  }

  for (std::size_t j = 0; j < to_assign.size(); ++j) {
    auto& o = out[to_assign[j]];
    if (batch_ok) {
      o.assignment = std::move(assigned[j]);
    } else {
      // Retry one by one so a single bad email does not sink the batch.
      try {
        o.assignment = topicmodel::transform(*model_, *provider_, batch[j]);
      } catch (const EmbedTransportError&) {
        throw;
      } catch (const std::exception& e) {
        o.disposition = {DispositionKind::Quarantined, e.what()};
        continue;
      }
    }
    o.assignment->disposition = o.disposition;
  }
  return out;
}

ServiceConfig ServiceConfig::from(const ConfigMap& cfg, const std::filesystem::path& base_dir) {
  ServiceConfig c;
  if (const auto* v = lookup<std::string>(cfg, "service.store")) c.store_path = resolve(base_dir, *v);
  if (const auto* v = lookup<std::string>(cfg, "service.model")) c.model_path = resolve(base_dir, *v);
  if (const auto* v = lookup<std::string>(cfg, "service.data_dir")) c.data_dir = resolve(base_dir, *v);
  if (const auto* v = lookup<std::string>(cfg, "service.static_dir")) c.static_dir = resolve(base_dir, *v);
  if (const auto* v = lookup<std::string>(cfg, "service.embed_provider")) c.embed_provider = *v;
  if (const auto* v = lookup<std::string>(cfg, "service.host")) c.host = *v;
  if (const auto* v = lookup<std::string>(cfg, "service.token")) c.token = *v;
  if (const auto* v = lookup<long long>(cfg, "service.port")) c.port = static_cast<int>(*v);
  if (const auto* v = lookup<long long>(cfg, "service.cadence_seconds")) {
    if (*v < 0) throw Error("invalid_config", "service.cadence_seconds must be >= 0");
    c.cadence = std::chrono::seconds(*v);
  }
  if (const auto* v = lookup<long long>(cfg, "service.batch_limit")) {
    if (*v <= 0) throw Error("invalid_config", "service.batch_limit must be positive");
    c.batch_limit = static_cast<std::size_t>(*v);
  }
  if (c.port <= 0 || c.port > 65535) throw Error("invalid_config", "service.port out of range");
  return c;
}

void ServiceConfig::apply_env() {
  if (const char* v = std::getenv("MAILTOPICS_STORE")) store_path = v;
  if (const char* v = std::getenv("MAILTOPICS_MODEL")) model_path = v;
  if (const char* v = std::getenv("MAILTOPICS_DATA_DIR")) data_dir = v;
  if (const char* v = std::getenv("MAILTOPICS_TOKEN")) token = v;
  if (const char* v = std::getenv("MAILTOPICS_PORT")) {
    try {
      port = std::stoi(v);
    } catch (const std::exception&) {
      throw Error("invalid_config", "MAILTOPICS_PORT is not a number");
    }
    if (port <= 0 || port > 65535) throw Error("invalid_config", "MAILTOPICS_PORT out of range");
  }
}

IncompleteDerivedMap::IncompleteDerivedMap(std::vector<int> uncovered)
    : Error("derived_map_incomplete", "no derived label for topic ids: " + join_ids(uncovered)),
      uncovered_(std::move(uncovered)) {}

TopicService::TopicService(std::shared_ptr<EmailStore> store, std::shared_ptr<const EmbeddingProvider> provider,
                           std::shared_ptr<const PipelineResources> resources, std::filesystem::path model_path)
    : store_(std::move(store)),
      provider_(std::move(provider)),
      resources_(std::move(resources)),
      model_path_(std::move(model_path)) {}

std::shared_ptr<const FittedTopicModel> TopicService::model() const {
  std::lock_guard lock(model_mu_);
  return model_;
}

std::uint64_t TopicService::revision() const {
  std::lock_guard lock(model_mu_);
  return revision_;
}

void TopicService::install_model(std::shared_ptr<const FittedTopicModel> model) {
  std::lock_guard lock(model_mu_);
  model_ = std::move(model);
  ++revision_;
}

std::shared_ptr<const FittedTopicModel> TopicService::require_model() const {
  auto m = model();
  if (!m) throw Error("model_missing", "no topic model loaded");
  return m;
}

BatchJob TopicService::run_batch(std::size_t limit) {
  std::unique_lock job(job_mu_, std::try_to_lock);
  if (!job.owns_lock()) throw Error("busy", "a batch job is already running");
  // The snapshot pins the model for the whole batch; a concurrent swap only
  // affects the next batch.
  const auto model = require_model();
  if (!model->derived_map_total())
    throw Error("derived_map_incomplete", "no derived label for topic ids: " + join_ids(model->uncovered_topics()));

  BatchJob job_record;
  job_record.requested_at = now_seconds();
  const auto start = std::chrono::steady_clock::now();

  const auto records = store_->unprocessed(limit);
  std::vector<RawEmail> emails;
  emails.reserve(records.size());
  for (const auto& r : records) emails.push_back(r.email);

  const AssignmentPipeline pipeline(model, provider_, resources_);
  const auto outcomes = pipeline.run(emails);

  std::size_t persisted = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    EmailRecord r = records[i];
    const auto& o = outcomes[i];
    r.disposition = o.disposition;
    r.language = std::string(to_string(o.language.lang));
    if (o.assignment) {
      r.model_topic = o.assignment->model_topic;
      r.derived_label = o.assignment->derived_label;
      r.truncated = o.assignment->truncated;
    }
    r.processed_at = now_seconds();
    if (store_->record_result(r)) {
      ++job_record.counts[std::string(label(o.disposition.kind))];
      ++job_record.size;
    }
    ++persisted;
    if (hooks_.after_persist) hooks_.after_persist(persisted);
  }

  job_record.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  job_record.per_email_seconds = job_record.size ? job_record.wall_time / static_cast<double>(job_record.size) : 0.0;
  job_record.id = store_->insert_job(job_record);
  return job_record;
}

FittedTopicModel TopicService::preview_merge(const std::vector<std::vector<int>>& groups) const {
  return topicmodel::merge_topics(*require_model(), groups);
}

std::shared_ptr<const FittedTopicModel> TopicService::mutate(
    const std::function<FittedTopicModel(const FittedTopicModel&)>& f, std::optional<std::uint64_t> base_revision) {
  std::unique_lock lock(mutate_mu_, std::try_to_lock);
  if (!lock.owns_lock()) throw Error("conflict", "another model change is in progress");
  std::shared_ptr<const FittedTopicModel> current;
  std::uint64_t rev = 0;
  {
    std::lock_guard g(model_mu_);
    current = model_;
    rev = revision_;
  }
  if (!current) throw Error("model_missing", "no topic model loaded");
  if (base_revision && *base_revision != rev)
    throw Error("conflict", "model changed since revision " + std::to_string(*base_revision) + " (now " +
                                std::to_string(rev) + ")");
  auto next = std::make_shared<const FittedTopicModel>(f(*current));
  if (!model_path_.empty()) artifact::save(*next, model_path_);
  std::lock_guard g(model_mu_);
  model_ = next;
  ++revision_;
  return next;
}

std::shared_ptr<const FittedTopicModel> TopicService::commit_merge(const std::vector<std::vector<int>>& groups,
                                                                   std::optional<std::uint64_t> base_revision) {
  return mutate([&](const FittedTopicModel& m) { return topicmodel::merge_topics(m, groups); }, base_revision);
}

std::shared_ptr<const FittedTopicModel> TopicService::set_label(int topic, const std::string& text) {
  return mutate([&](const FittedTopicModel& m) { return topicmodel::set_custom_labels(m, {{topic, text}}); },
                std::nullopt);
}

std::shared_ptr<const FittedTopicModel> TopicService::set_derived_map(const std::map<int, std::string>& derived) {
  return mutate(
      [&](const FittedTopicModel& m) {
        auto next = topicmodel::set_derived_map(m, derived);
        if (auto missing = next.uncovered_topics(); !missing.empty()) throw IncompleteDerivedMap(std::move(missing));
        return next;
      },
      std::nullopt);
}

BatchScheduler::BatchScheduler(TopicService& service, std::chrono::milliseconds interval, std::size_t limit,
                               Logger log)
    : service_(service), interval_(interval), limit_(limit), log_(std::move(log)) {
  if (interval_.count() <= 0) throw Error("invalid_config", "scheduler interval must be positive");
  thread_ = std::jthread([this](std::stop_token st) { loop(st); });
}

BatchScheduler::~BatchScheduler() {
  thread_.request_stop();
  cv_.notify_all();
}

std::size_t BatchScheduler::runs() const {
  std::lock_guard lock(mu_);
  return runs_;
}

void BatchScheduler::loop(std::stop_token stop) {
  while (!stop.stop_requested()) {
    {
      std::unique_lock lock(mu_);
      if (cv_.wait_for(lock, stop, interval_, [] { return false; })) return;
      if (stop.stop_requested()) return;
    }
    try {
      const BatchJob job = service_.run_batch(limit_);
      if (log_) log_("batch " + std::to_string(job.id) + ": " + std::to_string(job.size) + " emails");
    } catch (const std::exception& e) {
      if (log_) log_(std::string("batch skipped: ") + e.what());
    }
    std::lock_guard lock(mu_);
    ++runs_;
  }
}

}  // namespace mailtopics
