#include "mailtopics/store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <istream>
#include <ostream>

#include "mailtopics/error.hpp"
#include "mailtopics/jsonl.hpp"

namespace mailtopics {

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS emails (
  id TEXT PRIMARY KEY,
  from_addr TEXT NOT NULL,
  to_addrs TEXT NOT NULL,
  subject TEXT NOT NULL,
  body TEXT NOT NULL,
  received_at INTEGER NOT NULL,
  disposition TEXT,
  disposition_reason TEXT,
  model_topic INTEGER,
  derived_label TEXT,
  truncated INTEGER NOT NULL DEFAULT 0,
  processed_at INTEGER,
  reviewed INTEGER NOT NULL DEFAULT 0,
  language TEXT NOT NULL DEFAULT '',
  process_count INTEGER NOT NULL DEFAULT 0
);
CREATE INDEX IF NOT EXISTS emails_pending ON emails (processed_at, received_at, id);
CREATE INDEX IF NOT EXISTS emails_label ON emails (derived_label);
CREATE TABLE IF NOT EXISTS batch_jobs (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  requested_at INTEGER NOT NULL,
  size INTEGER NOT NULL,
  counts TEXT NOT NULL,
  wall_time REAL NOT NULL,
  per_email_seconds REAL NOT NULL
);
)sql";

constexpr const char* kColumns =
    "id, from_addr, to_addrs, subject, body, received_at, disposition, disposition_reason, model_topic, "
    "derived_label, truncated, processed_at, reviewed, language, process_count";

class Statement {
 public:
  Statement(sqlite3* db, const std::string& sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt_, nullptr) != SQLITE_OK)
      throw Error("io_error", std::string("sqlite prepare: ") + sqlite3_errmsg(db));
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  void bind(int i, const std::string& s) { sqlite3_bind_text(stmt_, i, s.data(), static_cast<int>(s.size()), SQLITE_TRANSIENT); }
  void bind(int i, std::int64_t v) { sqlite3_bind_int64(stmt_, i, v); }
  void bind(int i, double v) { sqlite3_bind_double(stmt_, i, v); }
  void bind_null(int i) { sqlite3_bind_null(stmt_, i); }

  /// True while rows remain.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw Error("io_error", std::string("sqlite step: ") + sqlite3_errmsg(db_));
  }
  void reset() {
    sqlite3_reset(stmt_);
    sqlite3_clear_bindings(stmt_);
  }

  bool is_null(int c) const { return sqlite3_column_type(stmt_, c) == SQLITE_NULL; }
  std::int64_t integer(int c) const { return sqlite3_column_int64(stmt_, c); }
  double real(int c) const { return sqlite3_column_double(stmt_, c); }
  std::string text(int c) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, c));
    return p ? std::string(p, static_cast<size_t>(sqlite3_column_bytes(stmt_, c))) : std::string();
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

std::int64_t epoch(Timestamp t) { return t.time_since_epoch().count(); }
Timestamp from_epoch(std::int64_t s) { return Timestamp(std::chrono::seconds(s)); }

EmailRecord read_record(const Statement& st) {
  EmailRecord r;
  r.email.id = st.text(0);
  r.email.from_addr = st.text(1);
  r.email.to_addrs = nlohmann::json::parse(st.text(2)).get<std::vector<std::string>>();
  r.email.subject = st.text(3);
  r.email.body = st.text(4);
  r.email.received_at = from_epoch(st.integer(5));
  if (!st.is_null(6)) r.disposition = Disposition{parse_disposition(st.text(6)), st.text(7)};
  if (!st.is_null(8)) r.model_topic = static_cast<int>(st.integer(8));
  if (!st.is_null(9)) r.derived_label = st.text(9);
  r.truncated = st.integer(10) != 0;
  if (!st.is_null(11)) r.processed_at = from_epoch(st.integer(11));
  r.reviewed = st.integer(12) != 0;
  r.language = st.text(13);
  r.process_count = static_cast<int>(st.integer(14));
  return r;
}

// WHERE clause and bound values for an EmailQuery.
struct Filter {
  std::string where = " WHERE 1=1";
  std::vector<std::string> args;
  std::optional<std::int64_t> reviewed;

  explicit Filter(const EmailQuery& q) {
    if (q.derived_label) {
      where += " AND derived_label = ?";
      args.push_back(*q.derived_label);
    }
    if (q.disposition) {
      where += " AND disposition = ?";
      args.emplace_back(label(*q.disposition));
    }
    if (q.reviewed) {
      where += " AND reviewed = ?";
      reviewed = *q.reviewed ? 1 : 0;
    }
  }
  int bind(Statement& st) const {
    int i = 1;
    for (const auto& a : args) st.bind(i++, a);
    if (reviewed) st.bind(i++, *reviewed);
    return i;
  }
};

void bind_email(Statement& st, const RawEmail& e) {
  st.bind(1, e.id);
  st.bind(2, e.from_addr);
  st.bind(3, nlohmann::json(e.to_addrs).dump());
  st.bind(4, e.subject);
  st.bind(5, e.body);
  st.bind(6, epoch(e.received_at));
}

}  // namespace

bool is_valid_month(std::string_view m) {
  if (m.size() != 7 || m[4] != '-') return false;
  for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u})
    if (m[i] < '0' || m[i] > '9') return false;
  const int month = (m[5] - '0') * 10 + (m[6] - '0');
  return month >= 1 && month <= 12;
}

nlohmann::json to_json(const EmailRecord& r) {
  nlohmann::json j = to_json(r.email);
  j["disposition"] = r.disposition ? nlohmann::json(label(r.disposition->kind)) : nlohmann::json();
  if (r.disposition && !r.disposition->reason.empty()) j["disposition_reason"] = r.disposition->reason;
  j["model_topic"] = r.model_topic ? nlohmann::json(*r.model_topic) : nlohmann::json();
  j["derived_label"] = r.derived_label ? nlohmann::json(*r.derived_label) : nlohmann::json();
  j["truncated"] = r.truncated;
  j["processed_at"] = r.processed_at ? nlohmann::json(format_timestamp(*r.processed_at)) : nlohmann::json();
  j["reviewed"] = r.reviewed;
  j["language"] = r.language;
  j["process_count"] = r.process_count;
  return j;
}

EmailRecord email_record_from_json(const nlohmann::json& j) {
  EmailRecord r;
  r.email = raw_email_from_json(j);
  if (j.contains("disposition") && !j["disposition"].is_null()) {
    r.disposition = Disposition{parse_disposition(j["disposition"].get<std::string>()),
                                j.value("disposition_reason", std::string())};
  }
  if (j.contains("model_topic") && !j["model_topic"].is_null()) r.model_topic = j["model_topic"].get<int>();
  if (j.contains("derived_label") && !j["derived_label"].is_null())
    r.derived_label = j["derived_label"].get<std::string>();
  r.truncated = j.value("truncated", false);
  if (j.contains("processed_at") && !j["processed_at"].is_null()) r.processed_at = parse_timestamp(j["processed_at"]);
  r.reviewed = j.value("reviewed", false);
  r.language = j.value("language", std::string());
  r.process_count = j.value("process_count", r.processed_at ? 1 : 0);
  return r;
}

nlohmann::json to_json(const BatchJob& job) {
  return {{"id", job.id},
          {"requested_at", format_timestamp(job.requested_at)},
          {"size", job.size},
          {"counts", job.counts},
          {"wall_time", job.wall_time},
          {"per_email_seconds", job.per_email_seconds}};
}

nlohmann::json to_json(const MonthlyReport& report) {
  return {{"month", report.month}, {"by_label", report.by_label}, {"by_disposition", report.by_disposition}};
}

EmailStore::EmailStore(const std::filesystem::path& path) {
  const std::string p = path.string();
  if (sqlite3_open_v2(p.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX, nullptr) !=
      SQLITE_OK) {
    const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw Error("io_error", "cannot open store " + p + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  exec("PRAGMA journal_mode=WAL;");
  exec("PRAGMA synchronous=NORMAL;");
  exec(kSchema);
}

EmailStore::~EmailStore() { sqlite3_close(db_); }

void EmailStore::exec(const char* sql) const {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown";
    sqlite3_free(err);
    throw Error("io_error", "sqlite: " + msg);
  }
}

IngestResult EmailStore::ingest(std::span<const RawEmail> emails) {
  std::lock_guard lock(mu_);
  IngestResult result;
  exec("BEGIN IMMEDIATE;");
  try {
    Statement st(db_,
                 "INSERT OR IGNORE INTO emails (id, from_addr, to_addrs, subject, body, received_at) "
                 "VALUES (?, ?, ?, ?, ?, ?)");
    for (size_t i = 0; i < emails.size(); ++i) {
      if (emails[i].id.empty()) {
        result.errors.push_back({i, "", "missing id"});
        continue;
      }
      bind_email(st, emails[i]);
      st.step();
      if (sqlite3_changes(db_) == 1)
        ++result.inserted;
      else
        ++result.duplicates;
      st.reset();
    }
    exec("COMMIT;");
  } catch (...) {
    exec("ROLLBACK;");
    throw;
  }
  return result;
}

IngestResult EmailStore::ingest_json(std::span<const nlohmann::json> items) {
  std::vector<RawEmail> emails;
  std::vector<size_t> origin;
  std::vector<IngestItemError> errors;
  for (size_t i = 0; i < items.size(); ++i) {
    try {
      emails.push_back(raw_email_from_json(items[i]));
      origin.push_back(i);
    } catch (const std::exception& e) {
      std::string id;
      if (items[i].is_object() && items[i].contains("id") && items[i]["id"].is_string()) id = items[i]["id"];
      errors.push_back({i, id, e.what()});
    }
  }
  IngestResult result = ingest(emails);
  for (auto& e : result.errors) e.index = origin[e.index];
  errors.insert(errors.end(), result.errors.begin(), result.errors.end());
  std::sort(errors.begin(), errors.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  result.errors = std::move(errors);
  return result;
}

std::vector<EmailRecord> EmailStore::unprocessed(std::size_t limit) const {
  std::lock_guard lock(mu_);
  Statement st(db_, std::string("SELECT ") + kColumns +
                        " FROM emails WHERE processed_at IS NULL ORDER BY received_at, id LIMIT ?");
  st.bind(1, static_cast<std::int64_t>(limit));
  std::vector<EmailRecord> out;
  while (st.step()) out.push_back(read_record(st));
  return out;
}

bool EmailStore::record_result(const EmailRecord& r) {
  if (!r.disposition || !r.processed_at) throw Error("invalid_record", "result needs a disposition and processed_at");
  std::lock_guard lock(mu_);
  // The processed_at guard makes the write idempotent across crashes and
  // overlapping workers.
  Statement st(db_,
               "UPDATE emails SET disposition = ?, disposition_reason = ?, model_topic = ?, derived_label = ?, "
               "truncated = ?, processed_at = ?, language = ?, process_count = process_count + 1 "
               "WHERE id = ? AND processed_at IS NULL");
  st.bind(1, std::string(label(r.disposition->kind)));
  st.bind(2, r.disposition->reason);
  if (r.model_topic)
    st.bind(3, static_cast<std::int64_t>(*r.model_topic));
  else
    st.bind_null(3);
  if (r.derived_label)
    st.bind(4, *r.derived_label);
  else
    st.bind_null(4);
  st.bind(5, static_cast<std::int64_t>(r.truncated ? 1 : 0));
  st.bind(6, epoch(*r.processed_at));
  st.bind(7, r.language);
  st.bind(8, r.email.id);
  st.step();
  return sqlite3_changes(db_) == 1;
}

std::optional<EmailRecord> EmailStore::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  Statement st(db_, std::string("SELECT ") + kColumns + " FROM emails WHERE id = ?");
  st.bind(1, id);
  if (!st.step()) return std::nullopt;
  return read_record(st);
}

std::vector<EmailRecord> EmailStore::query(const EmailQuery& q) const {
  if (q.page == 0 || q.page_size == 0) throw Error("invalid_argument", "page and page_size start at 1");
  std::lock_guard lock(mu_);
  const Filter f(q);
  Statement st(db_, std::string("SELECT ") + kColumns + " FROM emails" + f.where +
                        " ORDER BY received_at, id LIMIT ? OFFSET ?");
  int i = f.bind(st);
  st.bind(i++, static_cast<std::int64_t>(q.page_size));
  st.bind(i, static_cast<std::int64_t>((q.page - 1) * q.page_size));
  std::vector<EmailRecord> out;
  while (st.step()) out.push_back(read_record(st));
  return out;
}

std::size_t EmailStore::count(const EmailQuery& q) const {
  std::lock_guard lock(mu_);
  const Filter f(q);
  Statement st(db_, "SELECT COUNT(*) FROM emails" + f.where);
  f.bind(st);
  st.step();
  return static_cast<std::size_t>(st.integer(0));
}

std::size_t EmailStore::size() const { return count(EmailQuery{}); }

std::size_t EmailStore::unprocessed_count() const {
  std::lock_guard lock(mu_);
  Statement st(db_, "SELECT COUNT(*) FROM emails WHERE processed_at IS NULL");
  st.step();
  return static_cast<std::size_t>(st.integer(0));
}

bool EmailStore::set_reviewed(const std::string& id, bool reviewed) {
  std::lock_guard lock(mu_);
  Statement st(db_, "UPDATE emails SET reviewed = ? WHERE id = ?");
  st.bind(1, static_cast<std::int64_t>(reviewed ? 1 : 0));
  st.bind(2, id);
  st.step();
  return sqlite3_changes(db_) == 1;
}

std::int64_t EmailStore::insert_job(const BatchJob& job) {
  std::lock_guard lock(mu_);
  Statement st(db_,
               "INSERT INTO batch_jobs (requested_at, size, counts, wall_time, per_email_seconds) "
               "VALUES (?, ?, ?, ?, ?)");
  st.bind(1, epoch(job.requested_at));
  st.bind(2, static_cast<std::int64_t>(job.size));
  st.bind(3, nlohmann::json(job.counts).dump());
  st.bind(4, job.wall_time);
  st.bind(5, job.per_email_seconds);
  st.step();
  return sqlite3_last_insert_rowid(db_);
}

std::vector<BatchJob> EmailStore::jobs() const {
  std::lock_guard lock(mu_);
  Statement st(db_, "SELECT id, requested_at, size, counts, wall_time, per_email_seconds FROM batch_jobs ORDER BY id");
  std::vector<BatchJob> out;
  while (st.step()) {
    BatchJob j;
    j.id = st.integer(0);
    j.requested_at = from_epoch(st.integer(1));
    j.size = static_cast<std::size_t>(st.integer(2));
    j.counts = nlohmann::json::parse(st.text(3)).get<std::map<std::string, std::size_t>>();
    j.wall_time = st.real(4);
    j.per_email_seconds = st.real(5);
    out.push_back(std::move(j));
  }
  return out;
}

MonthlyReport EmailStore::monthly_report(const std::string& month) const {
  if (!is_valid_month(month)) throw Error("invalid_argument", "month must be YYYY-MM, got '" + month + "'");
  using namespace std::chrono;
  const int y = std::stoi(month.substr(0, 4));
  const unsigned m = static_cast<unsigned>(std::stoi(month.substr(5, 2)));
  const auto first = year_month_day{year{y}, std::chrono::month{m}, day{1}};
  const auto next = first + months{1};
  const std::int64_t from = sys_days(first).time_since_epoch().count() * 86400;
  const std::int64_t to = sys_days(next).time_since_epoch().count() * 86400;

  MonthlyReport report;
  report.month = month;
  std::lock_guard lock(mu_);
  Statement st(db_,
               "SELECT disposition, derived_label, COUNT(*) FROM emails "
               "WHERE processed_at IS NOT NULL AND received_at >= ? AND received_at < ? "
               "GROUP BY disposition, derived_label");
  st.bind(1, from);
  st.bind(2, to);
  while (st.step()) {
    const std::string disp = st.text(0);
    const auto n = static_cast<std::size_t>(st.integer(2));
    report.by_disposition[disp] += n;
    // Processed mail counts under its derived label; everything else under
    // its disposition label.
    const std::string key = parse_disposition(disp) == DispositionKind::Process && !st.is_null(1) ? st.text(1) : disp;
    report.by_label[key] += n;
  }
  return report;
}

void EmailStore::export_jsonl(std::ostream& out) const {
  std::lock_guard lock(mu_);
  Statement st(db_, std::string("SELECT ") + kColumns + " FROM emails ORDER BY received_at, id");
  while (st.step()) out << to_json(read_record(st)).dump() << '\n';
}

std::size_t EmailStore::import_jsonl(std::istream& in) {
  std::vector<EmailRecord> records;
  const auto errors = read_jsonl(in, [&](const nlohmann::json& j) { records.push_back(email_record_from_json(j)); });
  if (!errors.empty())
    throw Error("invalid_record", "line " + std::to_string(errors.front().line) + ": " + errors.front().message);
  std::lock_guard lock(mu_);
  exec("BEGIN IMMEDIATE;");
  try {
    Statement st(db_, std::string("INSERT OR REPLACE INTO emails (") + kColumns +
                          ") VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)");
    for (const auto& r : records) {
      bind_email(st, r.email);
      if (r.disposition) {
        st.bind(7, std::string(label(r.disposition->kind)));
        st.bind(8, r.disposition->reason);
      } else {
        st.bind_null(7);
        st.bind_null(8);
      }
      if (r.model_topic)
        st.bind(9, static_cast<std::int64_t>(*r.model_topic));
      else
        st.bind_null(9);
      if (r.derived_label)
        st.bind(10, *r.derived_label);
      else
        st.bind_null(10);
      st.bind(11, static_cast<std::int64_t>(r.truncated));
      if (r.processed_at)
        st.bind(12, epoch(*r.processed_at));
      else
        st.bind_null(12);
      st.bind(13, static_cast<std::int64_t>(r.reviewed));
      st.bind(14, r.language);
      st.bind(15, static_cast<std::int64_t>(r.process_count));
      st.step();
      st.reset();
    }
    exec("COMMIT;");
  } catch (...) {
    exec("ROLLBACK;");
    throw;
  }
  return records.size();
}

}  // namespace mailtopics
