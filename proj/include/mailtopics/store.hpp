#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mailtopics/filters.hpp"
#include "mailtopics/textprep.hpp"

struct sqlite3;

namespace mailtopics {

struct EmailRecord {
  RawEmail email;
  std::optional<Disposition> disposition;  // absent until processed
  std::optional<int> model_topic;
  std::optional<std::string> derived_label;
  bool truncated = false;
  std::optional<Timestamp> processed_at;
  bool reviewed = false;
  std::string language;
  int process_count = 0;  // result writes applied; exactly 1 once processed
};

struct BatchJob {
  std::int64_t id = 0;
  Timestamp requested_at{};
  std::size_t size = 0;
  std::map<std::string, std::size_t> counts;  // disposition label -> count
  double wall_time = 0.0;
  double per_email_seconds = 0.0;
};

struct MonthlyReport {
  std::string month;  // YYYY-MM
  std::map<std::string, std::size_t> by_label;
  std::map<std::string, std::size_t> by_disposition;
};

struct IngestItemError {
  std::size_t index = 0;
  std::string email_id;
  std::string message;
};

struct IngestResult {
  std::size_t inserted = 0;
  std::size_t duplicates = 0;
  std::vector<IngestItemError> errors;
};

struct EmailQuery {
  std::optional<std::string> derived_label;
  std::optional<DispositionKind> disposition;
  std::optional<bool> reviewed;
  std::size_t page = 1;  // 1-based
  std::size_t page_size = 50;
};

nlohmann::json to_json(const EmailRecord& r);
EmailRecord email_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BatchJob& job);
nlohmann::json to_json(const MonthlyReport& report);

/// Persistent email store (SQLite, single file; ":memory:" for tests).
/// All methods are safe to call from multiple threads.
class EmailStore {
 public:
  explicit EmailStore(const std::filesystem::path& path);
  ~EmailStore();
  EmailStore(const EmailStore&) = delete;
  EmailStore& operator=(const EmailStore&) = delete;

  /// One transaction per call. Existing ids are skipped, items without an id
  /// are reported and skipped.
  IngestResult ingest(std::span<const RawEmail> emails);
  IngestResult ingest_json(std::span<const nlohmann::json> items);

  /// Oldest unprocessed first, ordered by (received_at, id).
  std::vector<EmailRecord> unprocessed(std::size_t limit) const;

  /// Writes a processing result iff the record is still unprocessed. Returns
  /// false when another writer got there first.
  bool record_result(const EmailRecord& record);

  std::optional<EmailRecord> get(const std::string& id) const;
  std::vector<EmailRecord> query(const EmailQuery& q) const;
  std::size_t count(const EmailQuery& q) const;
  std::size_t size() const;
  std::size_t unprocessed_count() const;

  /// False when the id is unknown.
  bool set_reviewed(const std::string& id, bool reviewed);

  std::int64_t insert_job(const BatchJob& job);
  std::vector<BatchJob> jobs() const;

  MonthlyReport monthly_report(const std::string& month) const;

  /// One EmailRecord per line, ordered by (received_at, id).
  void export_jsonl(std::ostream& out) const;
  /// Upserts records, including processing results. Returns lines applied.
  std::size_t import_jsonl(std::istream& in);

 private:
  void exec(const char* sql) const;

  sqlite3* db_ = nullptr;
  mutable std::mutex mu_;
};

/// Validates "YYYY-MM".
bool is_valid_month(std::string_view month);

}  // namespace mailtopics
