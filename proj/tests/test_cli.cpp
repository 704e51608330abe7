#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mailtopics/artifact.hpp"
#include "mailtopics/cli.hpp"
#include "mailtopics/embed.hpp"
#include "mailtopics/jsonl.hpp"
#include "mailtopics/service.hpp"
#include "oracles.hpp"
#include "synth.hpp"

using namespace mailtopics;
using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), {"--data-dir", MAILTOPICS_DATA_DIR});
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() : path_(std::filesystem::temp_directory_path() / "mailtopics_cli_test") {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

void write_lines(const std::string& path, const std::vector<json>& rows) {
  std::ofstream f(path);
  for (const auto& r : rows) f << r.dump() << '\n';
}

void write_text(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

}  // namespace

TEST_CASE("fit, reduce-outliers and map-derived match the library") {
  TempDir dir;
  std::vector<json> docs;
  for (const auto& d : fixtures::blob().docs) docs.push_back(to_json(d));
  write_lines(dir / "docs.jsonl", docs);
  write_text(dir / "model.toml", "min_topic_size = 50\nmin_df = 20\nseed = 42\n");

  auto r = cli_run({"--config", dir / "model.toml", "--json", "fit", "--input", dir / "docs.jsonl", "--out", dir / "m.tqm"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(json::parse(r.out)["num_topics"] == 3);
  CHECK(artifact::serialize(artifact::load(dir / "m.tqm")) == artifact::serialize(fixtures::blob().model));

  r = cli_run({"reduce-outliers", "--model", dir / "m.tqm", "--out", dir / "r.tqm"});
  REQUIRE(r.code == cli::kExitOk);
  const auto reduced = topicmodel::reduce_outliers(fixtures::blob().model);
  CHECK(artifact::load(dir / "r.tqm").clusters.labels == reduced.clusters.labels);

  write_text(dir / "partial.json", R"({"0": "A"})");
  r = cli_run({"map-derived", "--model", dir / "r.tqm", "--map", dir / "partial.json", "--out", dir / "d.tqm"});
  CHECK(r.code == cli::kExitValidation);
  CHECK_FALSE(std::filesystem::exists(dir / "d.tqm"));
  r = cli_run({"map-derived", "--model", dir / "r.tqm", "--map", dir / "partial.json", "--out", dir / "d.tqm",
               "--allow-partial"});
  CHECK(r.code == cli::kExitOk);

  write_text(dir / "map.json", R"({"-1": "G", "0": "A", "1": "B", "2": "C"})");
  r = cli_run({"map-derived", "--model", dir / "r.tqm", "--map", dir / "map.json", "--out", dir / "d.tqm"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(artifact::load(dir / "d.tqm").derived_map_total());

  // transform equals the assignment pipeline
  const auto corpus = synth::service_corpus(40, 9);
  std::vector<json> raw;
  for (const auto& e : corpus.emails) raw.push_back(to_json(e));
  write_lines(dir / "raw.jsonl", raw);
  r = cli_run({"transform", "--model", dir / "d.tqm", "--input", dir / "raw.jsonl"});
  REQUIRE(r.code == cli::kExitOk);
  const auto model = std::make_shared<const FittedTopicModel>(artifact::load(dir / "d.tqm"));
  const AssignmentPipeline pipeline(model, std::make_shared<ReferenceProvider>(),
                                    std::make_shared<const PipelineResources>(PipelineResources::load(MAILTOPICS_DATA_DIR)));
  const auto outcomes = pipeline.run(corpus.emails);
  std::istringstream lines(r.out);
  std::string line;
  for (const auto& o : outcomes) {
    REQUIRE(std::getline(lines, line));
    const auto j = json::parse(line);
    CHECK(j["email_id"] == o.email_id);
    CHECK(j["disposition"] == std::string(label(o.disposition.kind)));
    if (o.assignment) {
      CHECK(j["model_topic"] == o.assignment->model_topic);
      CHECK(j["derived_label"] == o.assignment->derived_label);
    }
  }

  // merge, label, hierarchy
  r = cli_run({"merge", "--model", dir / "d.tqm", "--groups", "0,1", "--out", dir / "merged.tqm"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(artifact::load(dir / "merged.tqm").num_topics() == 2);
  r = cli_run({"merge", "--model", dir / "d.tqm", "--groups", "0,1;1,2", "--out", dir / "bad.tqm"});
  CHECK(r.code == cli::kExitValidation);
  r = cli_run({"label", "--model", dir / "d.tqm", "--topic", "2", "--label", "Televizija", "--out", dir / "l.tqm"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(artifact::load(dir / "l.tqm").custom_labels.at(2) == "Televizija");
  r = cli_run({"label", "--model", dir / "d.tqm", "--topic", "7", "--label", "x", "--out", dir / "l.tqm"});
  CHECK(r.code == cli::kExitValidation);
  r = cli_run({"--json", "export-hierarchy", "--model", dir / "d.tqm"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(json::parse(r.out)["merges"].size() == 2);

  // store workflow
  r = cli_run({"--json", "ingest", "--store", dir / "s.db", "--input", dir / "raw.jsonl"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(json::parse(r.out)["inserted"] == 40);
  r = cli_run({"--json", "run-batch", "--store", dir / "s.db", "--model", dir / "d.tqm", "--limit", "100"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(json::parse(r.out)["size"] == 40);
  r = cli_run({"--json", "report", "--store", dir / "s.db", "--month", "2024-05"});
  REQUIRE(r.code == cli::kExitOk);
  const auto month = json::parse(r.out);
  std::size_t total = 0;
  for (const auto& [_, n] : month["by_label"].items()) total += n.get<std::size_t>();
  CHECK(total == 40);
  CHECK(cli_run({"report", "--store", dir / "s.db", "--month", "May"}).code == cli::kExitValidation);

  // timing protocol at toy sizes
  r = cli_run({"--json", "time", "--model", dir / "d.tqm", "--input", dir / "raw.jsonl", "--sizes", "10,20", "--runs", "2"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(json::parse(r.out)["total_emails"] == 60);
  CHECK(cli_run({"time", "--model", dir / "d.tqm", "--input", dir / "raw.jsonl", "--sizes", "100"}).code ==
        cli::kExitValidation);
}

TEST_CASE("prep writes kept and rejected documents") {
  TempDir dir;
  std::vector<json> raw;
  auto add = [&](const std::string& id, const std::string& body) {
    RawEmail e;
    e.id = id;
    e.from_addr = "a@b.rs";
    e.body = body;
    raw.push_back(to_json(e));
  };
  add("ok", "Poštovani, internet ne radi već dva dana, molim vas proverite");
  add("short", "Hvala");
  add("dup", "Poštovani, internet ne radi već dva dana, molim vas proverite");
  write_lines(dir / "raw.jsonl", raw);
  const auto r = cli_run({"--json", "prep", "--input", dir / "raw.jsonl", "--out", dir / "clean.jsonl", "--rejected",
                          dir / "rej.jsonl"});
  REQUIRE(r.code == cli::kExitOk);
  const auto summary = json::parse(r.out);
  CHECK(summary["kept"] == 1);
  CHECK(summary["rejected"] == 2);
  CHECK(read_jsonl_file(dir / "clean.jsonl").size() == 1);
  CHECK(read_jsonl_file(dir / "rej.jsonl").size() == 2);
}

TEST_CASE("eval prints the fixture metrics") {
  const auto r = cli_run({"--json", "eval", "--gold", std::string(MAILTOPICS_TEST_DATA) + "/eval_gold.jsonl", "--pred",
                          std::string(MAILTOPICS_TEST_DATA) + "/eval_pred.jsonl"});
  REQUIRE(r.code == cli::kExitOk);
  const auto j = json::parse(r.out);
  CHECK(j["accuracy"].get<double>() == doctest::Approx(0.96).epsilon(1e-12));
  const auto human = cli_run({"eval", "--gold", std::string(MAILTOPICS_TEST_DATA) + "/eval_gold.jsonl", "--pred",
                              std::string(MAILTOPICS_TEST_DATA) + "/eval_pred.jsonl"});
  CHECK(human.out.find("0.9645") != std::string::npos);
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(cli_run({}).code == cli::kExitValidation);
  CHECK(cli_run({"fit"}).code == cli::kExitValidation);
  CHECK(cli_run({"bogus"}).code == cli::kExitValidation);
  CHECK(cli_run({"--help"}).code == cli::kExitOk);
  // Missing input files are runtime failures.
  const auto missing = cli_run({"--json", "fit", "--input", dir / "nope.jsonl", "--out", dir / "m.tqm"});
  CHECK(missing.code == cli::kExitRuntime);
  CHECK(json::parse(missing.out)["error"] == "io_error");
  write_text(dir / "junk.tqm", "garbage!");
  CHECK(cli_run({"reduce-outliers", "--model", dir / "junk.tqm", "--out", dir / "x.tqm"}).code == cli::kExitValidation);
  CHECK(cli_run({"run-batch", "--store", dir / "s.db", "--model", dir / "m.tqm", "--limit", "0"}).code ==
        cli::kExitValidation);
  CHECK(cli::is_validation_error("invalid_config"));
  CHECK_FALSE(cli::is_validation_error("io_error"));
}
