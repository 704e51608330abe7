#include "mailtopics/evalkit.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

#include "mailtopics/jsonl.hpp"

namespace mailtopics::evalkit {

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string effective_gold(const GoldLabel& gold, const std::string& prediction) {
  if (gold.dominant) return *gold.dominant;
  if (gold.topics.count(prediction)) return prediction;
  return *gold.topics.begin();
}

EvaluationReport score(const std::map<std::string, std::string>& predictions, std::span<const GoldLabel> gold) {
  std::vector<std::string> missing;
  for (const auto& g : gold)
    if (!predictions.count(g.email_id)) missing.push_back(g.email_id);
  if (!missing.empty()) {
    std::string ids;
    for (const auto& id : missing) ids += (ids.empty() ? "" : ", ") + id;
    throw Error("missing_predictions", "no prediction for: " + ids);
  }
  if (gold.empty()) throw Error("empty_input", "gold set is empty");

  EvaluationReport r;
  r.items = gold.size();
  std::map<std::string, std::size_t> predicted_count;
  std::size_t correct = 0;
  for (const auto& g : gold) {
    if (g.topics.empty()) throw Error("invalid_record", "gold item '" + g.email_id + "' has no topics");
    const std::string& pred = predictions.at(g.email_id);
    const std::string eff = effective_gold(g, pred);
    ++r.confusion[eff][pred];
    ++r.per_class[eff].support;
    r.per_class.try_emplace(pred);
    ++predicted_count[pred];
    if (eff == pred) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.items);

  for (auto& [cls, m] : r.per_class) {
    std::size_t tp = 0;
    if (auto row = r.confusion.find(cls); row != r.confusion.end())
      if (auto cell = row->second.find(cls); cell != row->second.end()) tp = cell->second;
    const std::size_t pred_n = predicted_count[cls];
    m.precision = pred_n ? static_cast<double>(tp) / static_cast<double>(pred_n) : 0.0;
    m.recall = m.support ? static_cast<double>(tp) / static_cast<double>(m.support) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    const double w = static_cast<double>(m.support) / static_cast<double>(r.items);
    r.weighted_precision += w * m.precision;
    r.weighted_recall += w * m.recall;
    r.weighted_f1 += w * m.f1;
  }
  return r;
}

GoldLabel gold_from_json(const nlohmann::json& j) {
  GoldLabel g;
  if (!j.is_object() || !j.contains("email_id") || !j["email_id"].is_string())
    throw Error("invalid_record", "gold line needs a string email_id");
  g.email_id = j["email_id"].get<std::string>();
  const auto& topics = j.value("topics", nlohmann::json::array());
  if (topics.is_string())
    g.topics.insert(topics.get<std::string>());
  else
    for (const auto& t : topics) g.topics.insert(t.get<std::string>());
  if (g.topics.empty()) throw Error("invalid_record", "gold item '" + g.email_id + "' has no topics");
  if (j.contains("dominant") && !j["dominant"].is_null()) {
    g.dominant = j["dominant"].get<std::string>();
    if (!g.topics.count(*g.dominant))
      throw Error("invalid_record", "dominant label of '" + g.email_id + "' is not among its topics");
  }
  return g;
}

std::vector<GoldLabel> read_gold(const std::filesystem::path& path) {
  std::vector<GoldLabel> out;
  for (const auto& j : read_jsonl_file(path)) out.push_back(gold_from_json(j));
  return out;
}

std::map<std::string, std::string> read_predictions(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  for (const auto& j : read_jsonl_file(path)) {
    if (!j.contains("email_id") || !j.contains("derived_label"))
      throw Error("invalid_record", "prediction line needs email_id and derived_label");
    const auto id = j["email_id"].get<std::string>();
    if (!out.emplace(id, j["derived_label"].get<std::string>()).second)
      throw Error("invalid_record", "duplicate prediction for '" + id + "'");
  }
  return out;
}

nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [cls, m] : r.per_class)
    per_class[cls] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  return {{"items", r.items},
          {"accuracy", r.accuracy},
          {"weighted_precision", r.weighted_precision},
          {"weighted_recall", r.weighted_recall},
          {"weighted_f1", r.weighted_f1},
          {"per_class", per_class},
          {"confusion", r.confusion}};
}

std::string format_table(const EvaluationReport& r) {
  std::ostringstream out;
  out << "Metric                        Result\n";
  out << "Accuracy                      " << fixed(r.accuracy) << '\n';
  out << "Weighted average precision    " << fixed(r.weighted_precision) << '\n';
  out << "Weighted average recall       " << fixed(r.weighted_recall) << '\n';
  out << "Weighted average F1           " << fixed(r.weighted_f1) << '\n';
  out << '\n';
  std::size_t width = 5;
  for (const auto& [cls, _] : r.per_class) width = std::max(width, cls.size());
  char line[512];
  std::snprintf(line, sizeof line, "%-*s  %9s  %9s  %9s  %7s\n", static_cast<int>(width), "Class", "Precision",
                "Recall", "F1", "Support");
  out << line;
  for (const auto& [cls, m] : r.per_class) {
    std::snprintf(line, sizeof line, "%-*s  %9.4f  %9.4f  %9.4f  %7zu\n", static_cast<int>(width), cls.c_str(),
                  m.precision, m.recall, m.f1, m.support);
    out << line;
  }
  return out.str();
}

TimingReport time_batches(const BatchRunner& run, std::span<const RawEmail> corpus,
                          const std::vector<std::size_t>& sizes, int runs, const Clock& clock) {
  if (sizes.empty() || runs < 1) throw Error("invalid_argument", "need at least one batch size and one run");
  const std::size_t largest = *std::max_element(sizes.begin(), sizes.end());
  if (sizes.end() != std::find(sizes.begin(), sizes.end(), std::size_t{0}))
    throw Error("invalid_argument", "batch sizes must be positive");
  if (corpus.size() < largest)
    throw Error("insufficient_data", "corpus has " + std::to_string(corpus.size()) + " emails, largest batch is " +
                                         std::to_string(largest));
  const Clock now = clock ? clock : [] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
  };

  TimingReport report;
  // Warm-up: first-touch allocations and lazy initialization stay out of the
  // measured runs.
  run(corpus.first(std::min<std::size_t>(corpus.size(), 10)));
  for (const std::size_t size : sizes) {
    BatchTiming t;
    t.size = size;
    const auto batch = corpus.first(size);
    for (int i = 0; i < runs; ++i) {
      const double start = now();
      run(batch);
      t.wall_seconds.push_back(now() - start);
    }
    double sum = 0.0;
    t.min_seconds_per_email = std::numeric_limits<double>::infinity();
    t.max_seconds_per_email = 0.0;
    for (const double w : t.wall_seconds) {
      const double per = w / static_cast<double>(size);
      t.min_seconds_per_email = std::min(t.min_seconds_per_email, per);
      t.max_seconds_per_email = std::max(t.max_seconds_per_email, per);
      sum += per;
      report.total_wall_seconds += w;
      report.total_emails += size;
    }
    t.mean_seconds_per_email = sum / static_cast<double>(runs);
    report.batches.push_back(std::move(t));
  }
  report.weighted_average_seconds_per_email = report.total_wall_seconds / static_cast<double>(report.total_emails);
  return report;
}

TimingReport time_batches(const AssignmentPipeline& pipeline, std::span<const RawEmail> corpus,
                          const std::vector<std::size_t>& sizes, int runs) {
  return time_batches([&](std::span<const RawEmail> batch) { (void)pipeline.run(batch); }, corpus, sizes, runs);
}

nlohmann::json to_json(const TimingReport& r) {
  nlohmann::json batches = nlohmann::json::array();
  for (const auto& b : r.batches)
    batches.push_back({{"size", b.size},
                       {"runs", b.wall_seconds.size()},
                       {"wall_seconds", b.wall_seconds},
                       {"min_seconds_per_email", b.min_seconds_per_email},
                       {"max_seconds_per_email", b.max_seconds_per_email},
                       {"mean_seconds_per_email", b.mean_seconds_per_email}});
  return {{"batches", batches},
          {"total_emails", r.total_emails},
          {"total_wall_seconds", r.total_wall_seconds},
          {"weighted_average_seconds_per_email", r.weighted_average_seconds_per_email}};
}

std::string format_table(const TimingReport& r) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%8s  %4s  %12s  %12s  %12s\n", "Batch", "Runs", "Min s/email", "Mean s/email",
                "Max s/email");
  out << line;
  for (const auto& b : r.batches) {
    std::snprintf(line, sizeof line, "%8zu  %4zu  %12.6f  %12.6f  %12.6f\n", b.size, b.wall_seconds.size(),
                  b.min_seconds_per_email, b.mean_seconds_per_email, b.max_seconds_per_email);
    out << line;
  }
  out << "Weighted average: " << fixed(r.weighted_average_seconds_per_email, 6) << " s/email over "
      << r.total_emails << " emails\n";
  return out.str();
}

}  // namespace mailtopics::evalkit
