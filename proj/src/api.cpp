#include "mailtopics/api.hpp"

// Eigen must precede httplib: <resolv.h> defines a _res macro.
#include "mailtopics/jsonl.hpp"

#include <httplib.h>

#include <sstream>

namespace mailtopics {

namespace {

using nlohmann::json;

json error_body(const std::string& code, const std::string& message) {
  return {{"error", code}, {"message", message}};
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded()) throw Error("invalid_json", "request body is not valid JSON");
  return j;
}

int parse_int(const std::string& s, const char* what) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw Error("invalid_argument", std::string(what) + " must be an integer");
  return v;
}

json topic_json(const FittedTopicModel& m, const TopicRepresentation& r) {
  json j = to_json(r);
  const auto c = m.custom_labels.find(r.topic_id);
  j["custom_label"] = c == m.custom_labels.end() ? json() : json(c->second);
  const auto d = m.derived_map.find(r.topic_id);
  j["derived_label"] = d == m.derived_map.end() ? json() : json(d->second);
  return j;
}

json topics_json(const FittedTopicModel& m, std::uint64_t revision) {
  json topics = json::array();
  for (const auto& r : m.representations) topics.push_back(topic_json(m, r));
  const auto outlier = m.derived_map.find(-1);
  return {{"revision", revision},
          {"num_topics", m.num_topics()},
          {"outliers",
           {{"size", m.clusters.outlier_count()},
            {"derived_label", outlier == m.derived_map.end() ? json() : json(outlier->second)}}},
          {"topics", topics},
          {"derived_map_total", m.derived_map_total()}};
}

std::vector<std::vector<int>> parse_groups(const json& body) {
  if (!body.contains("groups") || !body["groups"].is_array())
    throw Error("invalid_groups", "body needs \"groups\": [[topic ids], ...]");
  try {
    return body["groups"].get<std::vector<std::vector<int>>>();
  } catch (const json::exception&) {
    throw Error("invalid_groups", "groups must be arrays of integers");
  }
}

std::optional<bool> parse_bool_param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  const auto v = req.get_param_value(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error("invalid_argument", std::string(key) + " must be true or false");
}

}  // namespace

int http_status_for(const std::string& code) {
  if (code == "unknown_topic" || code == "not_found") return 404;
  if (code == "conflict" || code == "busy") return 409;
  if (code == "model_missing") return 503;
  if (code == "unauthorized") return 401;
  if (code == "embed_transport" || code == "io_error" || code == "numerical_error") return 500;
  return 400;
}

struct ApiServer::Impl {
  TopicService& service;
  ApiOptions options;
  httplib::Server server;

  Impl(TopicService& s, ApiOptions o) : service(s), options(std::move(o)) { routes(); }

  // Wraps a handler with auth and error mapping.
  template <typename F>
  httplib::Server::Handler wrap(F f) {
    return [this, f](const httplib::Request& req, httplib::Response& res) {
      try {
        if (!options.token.empty() && req.path != "/healthz" &&
            req.get_header_value("Authorization") != "Bearer " + options.token) {
          send_json(res, error_body("unauthorized", "missing or wrong token"), 401);
          return;
        }
        f(req, res);
      } catch (const IncompleteDerivedMap& e) {
        json body = error_body(e.code(), e.what());
        body["uncovered"] = e.uncovered();
        send_json(res, body, 400);
      } catch (const Error& e) {
        send_json(res, error_body(e.code(), e.what()), http_status_for(e.code()));
      } catch (const json::exception& e) {
        send_json(res, error_body("invalid_json", e.what()), 400);
      } catch (const std::exception& e) {
        send_json(res, error_body("internal", e.what()), 500);
      }
    };
  }

  std::shared_ptr<const FittedTopicModel> model() const {
    auto m = service.model();
    if (!m) throw Error("model_missing", "no topic model loaded");
    return m;
  }

  void routes() {
    server.Get("/healthz", wrap([this](const httplib::Request&, httplib::Response& res) {
                 const auto m = service.model();
                 send_json(res, {{"status", "ok"},
                                 {"model_loaded", m != nullptr},
                                 {"num_topics", m ? m->num_topics() : 0},
                                 {"revision", service.revision()},
                                 {"unprocessed", service.store().unprocessed_count()}});
               }));

    server.Get("/topics", wrap([this](const httplib::Request&, httplib::Response& res) {
                 // Read the revision first: a concurrent swap then shows up as a
                 // stale revision, never as a newer one over older topics.
                 const auto rev = service.revision();
                 send_json(res, topics_json(*model(), rev));
               }));

    server.Get("/hierarchy", wrap([this](const httplib::Request&, httplib::Response& res) {
                 send_json(res, to_json(topicmodel::hierarchy(*model())));
               }));

    server.Post("/topics/merge", wrap([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  const auto groups = parse_groups(body);
                  const bool what_if = body.value("what_if", true);
                  if (what_if) {
                    const auto preview = service.preview_merge(groups);
                    json out = topics_json(preview, service.revision());
                    out["preview"] = true;
                    send_json(res, out);
                    return;
                  }
                  std::optional<std::uint64_t> base;
                  if (body.contains("base_revision")) base = body["base_revision"].get<std::uint64_t>();
                  const auto next = service.commit_merge(groups, base);
                  json out = topics_json(*next, service.revision());
                  out["preview"] = false;
                  send_json(res, out);
                }));

    server.Put(R"(/topics/(-?\d+)/label)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                 const int id = parse_int(req.matches[1], "topic id");
                 const json body = parse_body(req);
                 if (!body.contains("label") || !body["label"].is_string())
                   throw Error("invalid_label", "body needs \"label\": string");
                 const auto next = service.set_label(id, body["label"].get<std::string>());
                 send_json(res, topic_json(*next, next->representations.at(static_cast<std::size_t>(id))));
               }));

    server.Put("/derived-map", wrap([this](const httplib::Request& req, httplib::Response& res) {
                 json body = parse_body(req);
                 if (body.contains("map")) body = body["map"];
                 if (!body.is_object()) throw Error("invalid_argument", "derived map must be an object");
                 std::map<int, std::string> derived;
                 for (const auto& [k, v] : body.items()) {
                   if (!v.is_string()) throw Error("invalid_label", "derived label for " + k + " must be a string");
                   derived[parse_int(k, "topic id")] = v.get<std::string>();
                 }
                 const auto next = service.set_derived_map(derived);
                 json out = json::object();
                 for (const auto& [t, l] : next->derived_map) out[std::to_string(t)] = l;
                 send_json(res, {{"revision", service.revision()}, {"map", out}});
               }));

    server.Get(R"(/topics/(-?\d+)/representative-docs)",
               wrap([this](const httplib::Request& req, httplib::Response& res) {
                 const int id = parse_int(req.matches[1], "topic id");
                 const auto m = model();
                 if (id < 0 || id >= m->num_topics())
                   throw Error("unknown_topic", "topic " + std::to_string(id) + " does not exist");
                 json docs = json::array();
                 const auto it = m->representative_docs.find(id);
                 if (it != m->representative_docs.end()) {
                   for (const auto& doc_id : it->second) {
                     json d{{"email_id", doc_id}};
                     for (std::size_t i = 0; i < m->corpus.ids.size(); ++i)
                       if (m->corpus.ids[i] == doc_id) d["text"] = m->corpus.texts[i];
                     docs.push_back(d);
                   }
                 }
                 send_json(res, {{"topic_id", id}, {"docs", docs}});
               }));

    server.Get("/emails", wrap([this](const httplib::Request& req, httplib::Response& res) {
                 EmailQuery q;
                 if (req.has_param("derived_label")) q.derived_label = req.get_param_value("derived_label");
                 if (req.has_param("disposition")) q.disposition = parse_disposition(req.get_param_value("disposition"));
                 q.reviewed = parse_bool_param(req, "reviewed");
                 if (req.has_param("page")) {
                   const int p = parse_int(req.get_param_value("page"), "page");
                   if (p < 1) throw Error("invalid_argument", "page starts at 1");
                   q.page = static_cast<std::size_t>(p);
                 }
                 if (req.has_param("page_size")) {
                   const int p = parse_int(req.get_param_value("page_size"), "page_size");
                   if (p < 1 || p > 1000) throw Error("invalid_argument", "page_size must be in 1..1000");
                   q.page_size = static_cast<std::size_t>(p);
                 }
                 json emails = json::array();
                 for (const auto& r : service.store().query(q)) emails.push_back(to_json(r));
                 send_json(res, {{"page", q.page},
                                 {"page_size", q.page_size},
                                 {"total", service.store().count(q)},
                                 {"emails", emails}});
               }));

    server.Post("/emails", wrap([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  const json items = body.is_array() ? body : body.value("emails", json::array());
                  if (!items.is_array()) throw Error("invalid_argument", "expected an array of emails");
                  std::vector<json> list(items.begin(), items.end());
                  const auto result = service.store().ingest_json(list);
                  json errors = json::array();
                  for (const auto& e : result.errors)
                    errors.push_back({{"index", e.index}, {"email_id", e.email_id}, {"message", e.message}});
                  send_json(res, {{"inserted", result.inserted}, {"duplicates", result.duplicates}, {"errors", errors}});
                }));

    server.Put(R"(/emails/([^/]+)/reviewed)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 const json body = parse_body(req);
                 const bool reviewed = body.value("reviewed", true);
                 if (!service.store().set_reviewed(id, reviewed))
                   throw Error("not_found", "email '" + id + "' does not exist");
                 send_json(res, {{"email_id", id}, {"reviewed", reviewed}});
               }));

    server.Post("/batches/run", wrap([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  const auto limit = body.value("limit", options.default_batch_limit);
                  if (limit == 0) throw Error("invalid_argument", "limit must be positive");
                  send_json(res, to_json(service.run_batch(limit)));
                }));

    server.Get("/batches", wrap([this](const httplib::Request&, httplib::Response& res) {
                 json jobs = json::array();
                 for (const auto& j : service.store().jobs()) jobs.push_back(to_json(j));
                 send_json(res, {{"jobs", jobs}});
               }));

    server.Get(R"(/reports/([^/]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string month = req.matches[1];
                 if (!is_valid_month(month)) throw Error("invalid_argument", "month must be YYYY-MM");
                 send_json(res, to_json(service.monthly_report(month)));
               }));

    if (!options.static_dir.empty()) server.set_mount_point("/ui", options.static_dir.string());
  }
};

ApiServer::ApiServer(TopicService& service, ApiOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

ApiServer::~ApiServer() { stop(); }

bool ApiServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int ApiServer::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool ApiServer::listen_after_bind() { return impl_->server.listen_after_bind(); }
void ApiServer::stop() { impl_->server.stop(); }
void ApiServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace mailtopics
