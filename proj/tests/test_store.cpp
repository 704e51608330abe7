#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <thread>

#include "mailtopics/error.hpp"
#include "mailtopics/store.hpp"
#include "synth.hpp"

using namespace mailtopics;

namespace {

RawEmail email(const std::string& id, Timestamp when) {
  RawEmail e;
  e.id = id;
  e.from_addr = "a@b.rs";
  e.subject = "s";
  e.body = "b " + id;
  e.received_at = when;
  return e;
}

EmailRecord processed(EmailRecord r, DispositionKind kind, std::optional<std::string> derived = std::nullopt) {
  r.disposition = Disposition{kind, kind == DispositionKind::Process ? "" : "test"};
  if (derived) {
    r.model_topic = 0;
    r.derived_label = derived;
  }
  r.processed_at = synth::at(2024, 6, 1);
  r.language = "sr";
  return r;
}

}  // namespace

TEST_CASE("ingest is idempotent") {
  EmailStore store(":memory:");
  const std::vector<RawEmail> batch{email("1", synth::at(2024, 5, 2)), email("2", synth::at(2024, 5, 1))};
  const auto first = store.ingest(batch);
  CHECK(first.inserted == 2);
  CHECK(first.duplicates == 0);
  const auto again = store.ingest(batch);
  CHECK(again.inserted == 0);
  CHECK(again.duplicates == 2);
  CHECK(store.size() == 2);
  CHECK(store.unprocessed_count() == 2);
  const auto got = store.get("1");
  REQUIRE(got);
  CHECK(got->email.body == "b 1");
  CHECK(got->email.received_at == synth::at(2024, 5, 2));
  CHECK_FALSE(got->disposition);
  CHECK_FALSE(store.get("3"));
}

TEST_CASE("ingest_json reports bad items without dropping good ones") {
  EmailStore store(":memory:");
  const std::vector<nlohmann::json> items{
      nlohmann::json::parse(R"({"id":"ok","from":"a@b.rs","body":"x","received_at":"2024-05-01T00:00:00Z"})"),
      nlohmann::json::parse(R"({"from":"a@b.rs","body":"x"})"),
      nlohmann::json::parse(R"({"id":"bad-ts","from":"a@b.rs","body":"x","received_at":"never"})"),
  };
  const auto r = store.ingest_json(items);
  CHECK(r.inserted == 1);
  REQUIRE(r.errors.size() == 2);
  CHECK(r.errors[0].index == 1);
  CHECK(r.errors[1].email_id == "bad-ts");
}

TEST_CASE("unprocessed is oldest first and limited") {
  EmailStore store(":memory:");
  std::vector<RawEmail> batch;
  for (int i = 0; i < 10; ++i) batch.push_back(email("e" + std::to_string(i), synth::at(2024, 5, 10 - i)));
  store.ingest(batch);
  const auto u = store.unprocessed(3);
  REQUIRE(u.size() == 3);
  CHECK(u[0].email.id == "e9");
  CHECK(u[2].email.id == "e7");
}

TEST_CASE("record_result applies exactly once") {
  EmailStore store(":memory:");
  store.ingest(std::vector<RawEmail>{email("1", synth::at(2024, 5, 1))});
  const auto r = processed(*store.get("1"), DispositionKind::Process, "Racuni");
  CHECK(store.record_result(r));
  CHECK_FALSE(store.record_result(r));
  const auto got = *store.get("1");
  CHECK(got.process_count == 1);
  CHECK(got.derived_label == "Racuni");
  CHECK(got.disposition->kind == DispositionKind::Process);
  CHECK(store.unprocessed_count() == 0);
}

TEST_CASE("concurrent writers cannot double-apply a result") {
  EmailStore store(":memory:");
  std::vector<RawEmail> batch;
  for (int i = 0; i < 50; ++i) batch.push_back(email(std::to_string(i), synth::at(2024, 5, 1)));
  store.ingest(batch);
  std::atomic<int> applied{0};
  {
    std::vector<std::jthread> writers;
    for (int w = 0; w < 4; ++w)
      writers.emplace_back([&] {
        for (const auto& r : store.unprocessed(100))
          if (store.record_result(processed(r, DispositionKind::InternalCorrespondence))) ++applied;
      });
  }
  CHECK(applied == 50);
  for (const auto& r : store.query({.page_size = 100})) CHECK(r.process_count == 1);
}

TEST_CASE("query filters and paginates") {
  EmailStore store(":memory:");
  std::vector<RawEmail> batch;
  for (int i = 0; i < 12; ++i) batch.push_back(email("q" + std::to_string(100 + i), synth::at(2024, 5, 1, i)));
  store.ingest(batch);
  for (int i = 0; i < 12; ++i) {
    auto r = *store.get("q" + std::to_string(100 + i));
    store.record_result(i % 3 == 0 ? processed(r, DispositionKind::SpamReplyForwardedOrEmpty)
                                   : processed(r, DispositionKind::Process, i % 2 ? "A" : "B"));
  }
  CHECK(store.count({.derived_label = "A"}) == 4);
  CHECK(store.count({.disposition = DispositionKind::SpamReplyForwardedOrEmpty}) == 4);
  CHECK(store.set_reviewed("q101", true));
  CHECK_FALSE(store.set_reviewed("missing", true));
  CHECK(store.count({.reviewed = true}) == 1);
  const auto page2 = store.query({.page = 2, .page_size = 5});
  REQUIRE(page2.size() == 5);
  CHECK(page2[0].email.id == "q105");
  CHECK(store.query({.page = 3, .page_size = 5}).size() == 2);
}

TEST_CASE("monthly report groups processed mail by derived or disposition label") {
  EmailStore store(":memory:");
  std::vector<RawEmail> batch{email("may1", synth::at(2024, 5, 3)), email("may2", synth::at(2024, 5, 31, 23)),
                              email("may3", synth::at(2024, 5, 4)), email("jun1", synth::at(2024, 6, 1, 0)),
                              email("may4", synth::at(2024, 5, 5))};
  store.ingest(batch);
  store.record_result(processed(*store.get("may1"), DispositionKind::Process, "Racuni"));
  store.record_result(processed(*store.get("may2"), DispositionKind::Process, "Racuni"));
  store.record_result(processed(*store.get("may3"), DispositionKind::InternalCorrespondence));
  store.record_result(processed(*store.get("jun1"), DispositionKind::Process, "Internet"));
  const auto r = store.monthly_report("2024-05");
  CHECK(r.by_label.at("Racuni") == 2);
  CHECK(r.by_label.at("Internal Correspondence") == 1);
  CHECK(r.by_label.count("Internet") == 0);
  CHECK(r.by_disposition.at("Process") == 2);
  std::size_t total = 0;
  for (const auto& [_, n] : r.by_label) total += n;
  CHECK(total == 3);  // may4 is unprocessed
  CHECK(store.monthly_report("2024-06").by_label.at("Internet") == 1);
  CHECK_THROWS_AS(store.monthly_report("2024-13"), Error);
  CHECK(is_valid_month("2024-12"));
  CHECK_FALSE(is_valid_month("2024-1"));
  CHECK_FALSE(is_valid_month("24-01x"));
}

TEST_CASE("batch jobs are recorded") {
  EmailStore store(":memory:");
  BatchJob job;
  job.requested_at = synth::at(2024, 5, 1);
  job.size = 3;
  job.counts = {{"Process", 2}, {"Internal Correspondence", 1}};
  job.wall_time = 0.3;
  job.per_email_seconds = 0.1;
  const auto id = store.insert_job(job);
  const auto jobs = store.jobs();
  REQUIRE(jobs.size() == 1);
  CHECK(jobs[0].id == id);
  CHECK(jobs[0].counts == job.counts);
  CHECK(jobs[0].per_email_seconds == 0.1);
  CHECK(to_json(jobs[0])["size"] == 3);
}

TEST_CASE("export and import round trip, file-backed") {
  const auto dir = std::filesystem::temp_directory_path() / "mailtopics_store_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::stringstream dump;
  {
    EmailStore store(dir / "a.db");
    store.ingest(std::vector<RawEmail>{email("x", synth::at(2024, 5, 1)), email("y", synth::at(2024, 5, 2))});
    store.record_result(processed(*store.get("x"), DispositionKind::Process, "Racuni"));
    store.set_reviewed("y", true);
    store.export_jsonl(dump);
  }
  {
    EmailStore reopened(dir / "a.db");
    CHECK(reopened.size() == 2);
  }
  EmailStore copy(dir / "b.db");
  CHECK(copy.import_jsonl(dump) == 2);
  const auto x = *copy.get("x");
  CHECK(x.derived_label == "Racuni");
  CHECK(x.process_count == 1);
  CHECK(copy.get("y")->reviewed);
  CHECK(to_json(email_record_from_json(to_json(x))) == to_json(x));
  std::filesystem::remove_all(dir);
}
