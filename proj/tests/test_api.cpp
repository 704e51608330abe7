#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>

// Eigen must precede httplib: <resolv.h> defines a _res macro.
#include "mailtopics/api.hpp"
#include "mailtopics/embed.hpp"
#include "mailtopics/jsonl.hpp"
#include "mailtopics/service.hpp"
#include "oracles.hpp"
#include "synth.hpp"

#include <httplib.h>

using namespace mailtopics;
using nlohmann::json;

namespace {

std::shared_ptr<const PipelineResources> resources() {
  static const auto r = std::make_shared<const PipelineResources>(PipelineResources::load(MAILTOPICS_DATA_DIR));
  return r;
}

std::shared_ptr<const FittedTopicModel> curated_model() {
  static const auto m = std::make_shared<const FittedTopicModel>(topicmodel::set_derived_map(
      fixtures::blob().model, {{-1, "General problems and malfunctions"}, {0, "A"}, {1, "B"}, {2, "C"}}));
  return m;
}

// A running server on an ephemeral port plus a client pointed at it.
struct Harness {
  std::shared_ptr<EmailStore> store = std::make_shared<EmailStore>(":memory:");
  TopicService service{store, std::make_shared<ReferenceProvider>(), resources()};
  ApiServer server;
  std::thread thread;
  int port = 0;
  std::string token;

  explicit Harness(ApiOptions options = {}, bool with_model = true)
      : server(service, options), token(options.token) {
    if (with_model) service.install_model(curated_model());
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~Harness() {
    server.stop();
    thread.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    if (!token.empty()) c.set_bearer_token_auth(token);
    return c;
  }

  std::pair<int, json> get(const std::string& path) const {
    auto res = client().Get(path);
    REQUIRE(res);
    return {res->status, json::parse(res->body, nullptr, false)};
  }
  std::pair<int, json> send(const std::string& method, const std::string& path, const json& body) const {
    auto c = client();
    auto res = method == "POST" ? c.Post(path, body.dump(), "application/json")
                                : c.Put(path, body.dump(), "application/json");
    REQUIRE(res);
    return {res->status, json::parse(res->body, nullptr, false)};
  }
};

json emails_json(std::size_t n, std::uint64_t seed) {
  json out = json::array();
  for (const auto& e : synth::service_corpus(n, seed).emails) out.push_back(to_json(e));
  return out;
}

}  // namespace

TEST_CASE("healthz and topics") {
  Harness h;
  auto [status, health] = h.get("/healthz");
  CHECK(status == 200);
  CHECK(health["model_loaded"] == true);
  CHECK(health["num_topics"] == 3);

  auto [ts, topics] = h.get("/topics");
  CHECK(ts == 200);
  CHECK(topics["num_topics"] == 3);
  CHECK(topics["derived_map_total"] == true);
  CHECK(topics["outliers"]["derived_label"] == "General problems and malfunctions");
  CHECK(topics["outliers"]["size"] == curated_model()->clusters.outlier_count());
  REQUIRE(topics["topics"].size() == 3);
  CHECK(topics["topics"][1]["derived_label"] == "B");
  CHECK(topics["topics"][1]["size"] == curated_model()->clusters.sizes[1]);
  CHECK(topics["topics"][1]["keywords"].size() == curated_model()->representations[1].keywords.size());
}

TEST_CASE("no model: 503 on model routes, health still answers") {
  Harness h({}, false);
  CHECK(h.get("/healthz").first == 200);
  const auto [status, body] = h.get("/topics");
  CHECK(status == 503);
  CHECK(body["error"] == "model_missing");
}

TEST_CASE("hierarchy and representative docs") {
  Harness h;
  const auto [hs, hier] = h.get("/hierarchy");
  CHECK(hs == 200);
  CHECK(hier["merges"].size() == 2);
  const auto [rs, docs] = h.get("/topics/0/representative-docs");
  CHECK(rs == 200);
  CHECK(docs["docs"].size() == 3);
  CHECK(docs["docs"][0].contains("text"));
  CHECK(h.get("/topics/7/representative-docs").first == 404);
}

TEST_CASE("merge preview does not change the model; commit does") {
  Harness h;
  const auto rev = h.service.revision();
  auto [ps, preview] = h.send("POST", "/topics/merge", {{"groups", {{0, 1}}}});
  CHECK(ps == 200);
  CHECK(preview["preview"] == true);
  CHECK(preview["num_topics"] == 2);
  CHECK(h.get("/topics").second["num_topics"] == 3);

  auto [stale, stale_body] =
      h.send("POST", "/topics/merge", {{"groups", {{0, 1}}}, {"what_if", false}, {"base_revision", rev + 9}});
  CHECK(stale == 409);
  CHECK(stale_body["error"] == "conflict");

  auto [cs, committed] = h.send("POST", "/topics/merge", {{"groups", {{0, 1}}}, {"what_if", false}, {"base_revision", rev}});
  CHECK(cs == 200);
  CHECK(committed["num_topics"] == 2);
  CHECK(committed["revision"] == rev + 1);
  CHECK(h.get("/topics").second["num_topics"] == 2);
}

TEST_CASE("merge validation errors") {
  Harness h;
  CHECK(h.send("POST", "/topics/merge", {{"groups", {{0, 0, 1}}}}).first == 400);
  CHECK(h.send("POST", "/topics/merge", {{"groups", {{0}}}}).first == 400);
  CHECK(h.send("POST", "/topics/merge", {{"groups", {{0, 9}}}}).first == 404);
  CHECK(h.send("POST", "/topics/merge", {{"nope", 1}}).first == 400);
  auto res = h.client().Post("/topics/merge", "{not json", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
}

TEST_CASE("labels and derived map") {
  Harness h;
  auto [ls, label] = h.send("PUT", "/topics/2/label", {{"label", "Televizija"}});
  CHECK(ls == 200);
  CHECK(label["custom_label"] == "Televizija");
  CHECK(h.send("PUT", "/topics/5/label", {{"label", "x"}}).first == 404);
  CHECK(h.send("PUT", "/topics/1/label", {{"label", ""}}).first == 400);
  CHECK(h.send("PUT", "/topics/1/label", json::object()).first == 400);

  auto [ps, partial] = h.send("PUT", "/derived-map", {{"0", "A"}});
  CHECK(ps == 400);
  CHECK(partial["error"] == "derived_map_incomplete");
  CHECK(partial["uncovered"] == json::array({-1, 1, 2}));

  auto [ms, full] = h.send("PUT", "/derived-map", {{"map", {{"-1", "G"}, {"0", "X"}, {"1", "X"}, {"2", "Y"}}}});
  CHECK(ms == 200);
  CHECK(full["map"]["1"] == "X");
  CHECK(h.send("PUT", "/derived-map", {{"zero", "A"}}).first == 400);
}

TEST_CASE("ingest, batch, triage and report") {
  Harness h;
  auto [is, ingested] = h.send("POST", "/emails", emails_json(60, 2));
  CHECK(is == 200);
  CHECK(ingested["inserted"] == 60);
  CHECK(h.send("POST", "/emails", {{"emails", emails_json(60, 2)}}).second["duplicates"] == 60);

  auto [bs, job] = h.send("POST", "/batches/run", {{"limit", 40}});
  CHECK(bs == 200);
  CHECK(job["size"] == 40);
  CHECK(h.send("POST", "/batches/run", json::object()).second["size"] == 20);
  CHECK(h.send("POST", "/batches/run", {{"limit", 0}}).first == 400);
  CHECK(h.get("/batches").second["jobs"].size() == 2);

  auto [es, page] = h.get("/emails?page=1&page_size=25");
  CHECK(es == 200);
  CHECK(page["total"] == 60);
  CHECK(page["emails"].size() == 25);
  const auto internal = h.get("/emails?disposition=Internal%20Correspondence").second;
  CHECK(internal["total"] == 3);
  const auto id = page["emails"][0]["id"].get<std::string>();
  CHECK(h.send("PUT", "/emails/" + id + "/reviewed", {{"reviewed", true}}).first == 200);
  CHECK(h.get("/emails?reviewed=true").second["total"] == 1);
  CHECK(h.send("PUT", "/emails/missing/reviewed", json::object()).first == 404);
  CHECK(h.get("/emails?page=0").first == 400);
  CHECK(h.get("/emails?reviewed=maybe").first == 400);
  CHECK(h.get("/emails?disposition=nope").first == 400);

  auto [rs, report] = h.get("/reports/2024-05");
  CHECK(rs == 200);
  std::size_t total = 0;
  for (const auto& [_, n] : report["by_label"].items()) total += n.get<std::size_t>();
  CHECK(total == 60);
  CHECK(h.get("/reports/2024-5").first == 400);
}

TEST_CASE("running a batch before curation completes is rejected") {
  Harness h;
  h.service.install_model(std::make_shared<const FittedTopicModel>(fixtures::blob().model));
  const auto [status, body] = h.send("POST", "/batches/run", json::object());
  CHECK(status == 400);
  CHECK(body["error"] == "derived_map_incomplete");
}

TEST_CASE("token auth") {
  ApiOptions opts;
  opts.token = "s3cret";
  Harness h(opts);
  CHECK(h.get("/topics").first == 200);
  httplib::Client anon("127.0.0.1", h.port);
  auto res = anon.Get("/topics");
  REQUIRE(res);
  CHECK(res->status == 401);
  res = anon.Get("/healthz");
  REQUIRE(res);
  CHECK(res->status == 200);
}

TEST_CASE("static files under /ui") {
  const auto dir = std::filesystem::temp_directory_path() / "mailtopics_api_ui";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "index.html") << "<html>ok</html>";
  ApiOptions opts;
  opts.static_dir = dir;
  Harness h(opts);
  auto res = h.client().Get("/ui/index.html");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == "<html>ok</html>");
  std::filesystem::remove_all(dir);
}

TEST_CASE("error codes map to statuses") {
  CHECK(http_status_for("unknown_topic") == 404);
  CHECK(http_status_for("not_found") == 404);
  CHECK(http_status_for("conflict") == 409);
  CHECK(http_status_for("busy") == 409);
  CHECK(http_status_for("model_missing") == 503);
  CHECK(http_status_for("invalid_groups") == 400);
  CHECK(http_status_for("io_error") == 500);
}
