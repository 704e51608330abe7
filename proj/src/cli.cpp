#include "mailtopics/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mailtopics/api.hpp"
#include "mailtopics/artifact.hpp"
#include "mailtopics/config.hpp"
#include "mailtopics/evalkit.hpp"
#include "mailtopics/jsonl.hpp"
#include "mailtopics/phrases.hpp"
#include "mailtopics/service.hpp"

#ifndef MAILTOPICS_DEFAULT_DATA_DIR
#define MAILTOPICS_DEFAULT_DATA_DIR "data"
#endif

namespace mailtopics::cli {

namespace {

using nlohmann::json;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  bool json = false;
  std::string data_dir;
};

std::filesystem::path data_dir(const Globals& g) {
  if (!g.data_dir.empty()) return g.data_dir;
  if (const char* v = std::getenv("MAILTOPICS_DATA_DIR")) return v;
  return MAILTOPICS_DEFAULT_DATA_DIR;
}

std::vector<RawEmail> read_emails(const std::filesystem::path& path) {
  std::vector<RawEmail> out;
  for (const auto& j : read_jsonl_file(path)) out.push_back(raw_email_from_json(j));
  return out;
}

ModelConfig model_config(const Globals& g) {
  ModelConfig cfg;
  if (!g.config.empty()) {
    const std::filesystem::path p(g.config);
    cfg = model_config_from(load_config(p), p.parent_path());
  }
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

std::shared_ptr<const PipelineResources> resources(const Globals& g) {
  return std::make_shared<const PipelineResources>(PipelineResources::load(data_dir(g)));
}

std::vector<std::vector<int>> parse_groups(const std::string& spec) {
  // "1,2,3;4,5" or a JSON array of arrays
  if (!spec.empty() && spec.front() == '[') {
    const auto j = json::parse(spec, nullptr, false);
    if (j.is_discarded()) throw Error("invalid_groups", "groups are not valid JSON");
    return j.get<std::vector<std::vector<int>>>();
  }
  std::vector<std::vector<int>> groups;
  std::stringstream ss(spec);
  std::string group;
  while (std::getline(ss, group, ';')) {
    std::vector<int> ids;
    std::stringstream gs(group);
    std::string id;
    while (std::getline(gs, id, ',')) {
      try {
        std::size_t pos = 0;
        ids.push_back(std::stoi(id, &pos));
        if (pos != id.size()) throw std::invalid_argument(id);
      } catch (const std::exception&) {
        throw Error("invalid_groups", "'" + id + "' is not a topic id");
      }
    }
    groups.push_back(std::move(ids));
  }
  return groups;
}

std::map<int, std::string> read_label_map(const std::filesystem::path& path) {
  const auto j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("invalid_argument", path.string() + " must hold a JSON object");
  std::map<int, std::string> out;
  for (const auto& [k, v] : j.items()) {
    try {
      std::size_t pos = 0;
      const int id = std::stoi(k, &pos);
      if (pos != k.size()) throw std::invalid_argument(k);
      out[id] = v.get<std::string>();
    } catch (const std::exception&) {
      throw Error("invalid_argument", "bad entry '" + k + "' in " + path.string());
    }
  }
  return out;
}

json topics_summary(const FittedTopicModel& m) {
  json topics = json::array();
  for (const auto& r : m.representations) topics.push_back(to_json(r));
  return {{"num_topics", m.num_topics()}, {"outliers", m.clusters.outlier_count()}, {"topics", topics}};
}

void write_jsonl(const std::vector<json>& rows, const std::string& path, std::ostream& out) {
  std::ofstream file;
  std::ostream* target = &out;
  if (!path.empty()) {
    file.open(path, std::ios::trunc);
    if (!file) throw Error("io_error", "cannot write " + path);
    target = &file;
  }
  for (const auto& r : rows) *target << r.dump() << '\n';
}

struct Printer {
  const Globals& g;
  std::ostream& out;
  void operator()(const json& j, const std::string& human) const {
    if (g.json)
      out << j.dump() << '\n';
    else
      out << human << (human.empty() || human.back() == '\n' ? "" : "\n");
  }
};

}  // namespace

bool is_validation_error(const std::string& code) {
  return code.rfind("invalid_", 0) == 0 || code.rfind("missing_", 0) == 0 || code == "unknown_topic" ||
         code == "overlapping_groups" || code == "derived_map_incomplete" || code == "too_few_topics" ||
         code == "empty_input" || code == "bad_magic" || code == "insufficient_data";
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  Globals g;
  CLI::App app{"Email topic detection: preprocessing, topic modeling, batch service and evaluation", "mailtopics"};
  app.require_subcommand(1);
  app.add_option("--seed", g.seed, "Override the model seed");
  app.add_option("--config", g.config, "Config file (TOML subset or JSON)");
  app.add_flag("--json", g.json, "Machine-readable output");
  app.add_option("--data-dir", g.data_dir, "Phrase packs, language profiles and address lists");
  const Printer print{g, out};

  std::string input, output, model_path, rejected, groups, label_text, labels_file, map_file, gold, pred, store_path,
      month, sizes_spec = "100,1000,10000";
  int topic = 0, runs = 3;
  std::size_t limit = 0;
  bool allow_partial = false;

  auto* prep = app.add_subcommand("prep", "Training-time preprocessing of a raw corpus");
  prep->add_option("--input", input, "Raw corpus JSONL")->required();
  prep->add_option("--out", output, "Cleaned documents JSONL")->required();
  prep->add_option("--rejected", rejected, "Rejections JSONL");

  auto* fit = app.add_subcommand("fit", "Fit a topic model");
  fit->add_option("--input", input, "Raw corpus or cleaned documents JSONL")->required();
  fit->add_option("--out", output, "Model artifact path")->required();

  auto* outliers = app.add_subcommand("reduce-outliers", "Reassign outlier documents");
  outliers->add_option("--model", model_path)->required();
  outliers->add_option("--out", output)->required();

  auto* transform = app.add_subcommand("transform", "Assign topics to new emails");
  transform->add_option("--model", model_path)->required();
  transform->add_option("--input", input, "Raw emails JSONL")->required();
  transform->add_option("--out", output, "Assignments JSONL (default stdout)");

  auto* merge = app.add_subcommand("merge", "Merge topic groups");
  merge->add_option("--model", model_path)->required();
  merge->add_option("--groups", groups, "\"1,2;3,4\" or [[1,2],[3,4]]")->required();
  merge->add_option("--out", output)->required();

  auto* label_cmd = app.add_subcommand("label", "Set custom topic labels");
  label_cmd->add_option("--model", model_path)->required();
  label_cmd->add_option("--topic", topic);
  label_cmd->add_option("--label", label_text);
  label_cmd->add_option("--labels", labels_file, "JSON object of topic id -> label");
  label_cmd->add_option("--out", output)->required();

  auto* map_cmd = app.add_subcommand("map-derived", "Set the topic -> derived label map");
  map_cmd->add_option("--model", model_path)->required();
  map_cmd->add_option("--map", map_file, "JSON object of topic id -> derived label")->required();
  map_cmd->add_option("--out", output)->required();
  map_cmd->add_flag("--allow-partial", allow_partial, "Accept a map that leaves topics uncovered");

  auto* eval = app.add_subcommand("eval", "Score predictions against gold labels");
  eval->add_option("--gold", gold)->required();
  eval->add_option("--pred", pred)->required();

  auto* time_cmd = app.add_subcommand("time", "Batch timing protocol");
  time_cmd->add_option("--model", model_path)->required();
  time_cmd->add_option("--input", input, "Raw emails JSONL")->required();
  time_cmd->add_option("--sizes", sizes_spec, "Comma-separated batch sizes");
  time_cmd->add_option("--runs", runs)->check(CLI::PositiveNumber);

  auto* serve = app.add_subcommand("serve", "Run the HTTP API and batch scheduler");

  auto* ingest = app.add_subcommand("ingest", "Store raw emails");
  ingest->add_option("--store", store_path)->required();
  ingest->add_option("--input", input)->required();

  auto* run_batch = app.add_subcommand("run-batch", "Process one batch of stored emails");
  run_batch->add_option("--store", store_path)->required();
  run_batch->add_option("--model", model_path)->required();
  run_batch->add_option("--limit", limit)->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "Monthly counts");
  report->add_option("--store", store_path)->required();
  report->add_option("--month", month, "YYYY-MM")->required();

  auto* hierarchy = app.add_subcommand("export-hierarchy", "Write the topic hierarchy as JSON");
  hierarchy->add_option("--model", model_path)->required();
  hierarchy->add_option("--out", output);

  std::vector<std::string> args(raw_args.rbegin(), raw_args.rend());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    if (g.json) out << json{{"error", "invalid_arguments"}, {"message", e.what()}}.dump() << '\n';
    return kExitValidation;
  }

  try {
    if (prep->parsed()) {
      const auto res = resources(g);
      const auto provider = make_provider(model_config(g).embed_provider);
      auto result = textprep::preprocess_for_training(
          read_emails(input), res->prep, [&](std::string_view t) { return provider->count_tokens(t); });
      filters::screen_training_corpus(result, res->prep, res->profiles, res->filter.english_threshold);
      std::vector<json> kept, rej;
      for (const auto& d : result.kept) kept.push_back(to_json(d));
      for (const auto& r : result.rejected) rej.push_back({{"email_id", r.email_id}, {"reason", to_string(r.reason)}});
      write_jsonl(kept, output, out);
      if (!rejected.empty()) write_jsonl(rej, rejected, out);
      json counts = json::object();
      for (const auto& r : result.rejected) counts[std::string(to_string(r.reason))] = counts.value(std::string(to_string(r.reason)), 0) + 1;
      print({{"kept", result.kept.size()}, {"rejected", result.rejected.size()}, {"by_reason", counts}},
            "kept " + std::to_string(result.kept.size()) + ", rejected " + std::to_string(result.rejected.size()));
    } else if (fit->parsed()) {
      const ModelConfig cfg = model_config(g);
      const auto provider = make_provider(cfg.embed_provider);
      const auto lines = read_jsonl_file(input);
      std::vector<CleanDocument> docs;
      if (!lines.empty() && lines.front().contains("text")) {
        for (const auto& j : lines) docs.push_back(clean_document_from_json(j));
      } else {
        const auto res = resources(g);
        std::vector<RawEmail> emails;
        for (const auto& j : lines) emails.push_back(raw_email_from_json(j));
        auto result = textprep::preprocess_for_training(
            emails, res->prep, [&](std::string_view t) { return provider->count_tokens(t); });
        filters::screen_training_corpus(result, res->prep, res->profiles, res->filter.english_threshold);
        docs = std::move(result.kept);
      }
      const auto model = topicmodel::fit(docs, cfg, *provider);
      artifact::save(model, output);
      print({{"num_topics", model.num_topics()},
             {"outliers", model.clusters.outlier_count()},
             {"documents", docs.size()},
             {"model", output}},
            "topics: " + std::to_string(model.num_topics()) + " (outliers: " +
                std::to_string(model.clusters.outlier_count()) + ")");
    } else if (outliers->parsed()) {
      const auto model = artifact::load(model_path);
      const auto reduced = topicmodel::reduce_outliers(model);
      artifact::save(reduced, output);
      print({{"outliers_before", model.clusters.outlier_count()}, {"outliers_after", reduced.clusters.outlier_count()}},
            "outliers: " + std::to_string(model.clusters.outlier_count()) + " -> " +
                std::to_string(reduced.clusters.outlier_count()));
    } else if (transform->parsed()) {
      auto model = std::make_shared<const FittedTopicModel>(artifact::load(model_path));
      const auto provider = make_provider(model->config.embed_provider);
      const AssignmentPipeline pipeline(model, provider, resources(g));
      const auto emails = read_emails(input);
      std::vector<json> rows;
      for (const auto& o : pipeline.run(emails)) {
        if (o.assignment) {
          rows.push_back(to_json(*o.assignment));
        } else {
          TopicAssignment a;
          a.email_id = o.email_id;
          a.disposition = o.disposition;
          rows.push_back(to_json(a));
        }
      }
      write_jsonl(rows, output, out);
      if (!output.empty()) print({{"assigned", rows.size()}, {"out", output}}, "assigned " + std::to_string(rows.size()));
    } else if (merge->parsed()) {
      const auto merged = topicmodel::merge_topics(artifact::load(model_path), parse_groups(groups));
      artifact::save(merged, output);
      print(topics_summary(merged), "topics: " + std::to_string(merged.num_topics()));
    } else if (label_cmd->parsed()) {
      std::map<int, std::string> labels;
      if (!labels_file.empty()) labels = read_label_map(labels_file);
      if (!label_text.empty()) labels[topic] = label_text;
      if (labels.empty()) throw Error("invalid_argument", "give --topic/--label or --labels");
      const auto labeled = topicmodel::set_custom_labels(artifact::load(model_path), labels);
      artifact::save(labeled, output);
      print({{"labeled", labels.size()}}, "labeled " + std::to_string(labels.size()) + " topics");
    } else if (map_cmd->parsed()) {
      const auto mapped = topicmodel::set_derived_map(artifact::load(model_path), read_label_map(map_file));
      const auto uncovered = mapped.uncovered_topics();
      if (!uncovered.empty() && !allow_partial) throw IncompleteDerivedMap(uncovered);
      artifact::save(mapped, output);
      print({{"derived_labels", mapped.derived_labels()}, {"uncovered", uncovered}},
            std::to_string(mapped.derived_labels().size()) + " derived labels, " + std::to_string(uncovered.size()) +
                " topics uncovered");
    } else if (eval->parsed()) {
      const auto golds = evalkit::read_gold(gold);
      const auto report = evalkit::score(evalkit::read_predictions(pred), golds);
      print(evalkit::to_json(report), evalkit::format_table(report));
    } else if (time_cmd->parsed()) {
      std::vector<std::size_t> sizes;
      std::stringstream ss(sizes_spec);
      for (std::string s; std::getline(ss, s, ',');) {
        try {
          sizes.push_back(static_cast<std::size_t>(std::stoul(s)));
        } catch (const std::exception&) {
          throw Error("invalid_argument", "bad batch size '" + s + "'");
        }
      }
      auto model = std::make_shared<const FittedTopicModel>(artifact::load(model_path));
      const AssignmentPipeline pipeline(model, make_provider(model->config.embed_provider), resources(g));
      const auto report = evalkit::time_batches(pipeline, read_emails(input), sizes, runs);
      print(evalkit::to_json(report), evalkit::format_table(report));
    } else if (serve->parsed()) {
      ServiceConfig sc;
      if (!g.config.empty()) sc = ServiceConfig::from(load_config(g.config), std::filesystem::path(g.config).parent_path());
      sc.apply_env();
      if (sc.data_dir.empty()) sc.data_dir = data_dir(g);
      auto store = std::make_shared<EmailStore>(sc.store_path);
      TopicService service(store, make_provider(sc.embed_provider),
                           std::make_shared<const PipelineResources>(PipelineResources::load(sc.data_dir)),
                           sc.model_path);
      if (!sc.model_path.empty() && std::filesystem::exists(sc.model_path))
        service.install_model(std::make_shared<const FittedTopicModel>(artifact::load(sc.model_path)));
      std::unique_ptr<BatchScheduler> scheduler;
      if (sc.cadence.count() > 0)
        scheduler = std::make_unique<BatchScheduler>(service, sc.cadence, sc.batch_limit,
                                                     [&err](const std::string& m) { err << m << '\n'; });
      ApiServer api(service, {sc.token, sc.static_dir, sc.batch_limit});
      err << "listening on " << sc.host << ':' << sc.port << '\n';
      if (!api.listen(sc.host, sc.port)) throw Error("io_error", "cannot listen on port " + std::to_string(sc.port));
    } else if (ingest->parsed()) {
      EmailStore store(store_path);
      const auto result = store.ingest_json(read_jsonl_file(input));
      json errors = json::array();
      for (const auto& e : result.errors) {
        errors.push_back({{"index", e.index}, {"email_id", e.email_id}, {"message", e.message}});
        err << "item " << e.index << ": " << e.message << '\n';
      }
      print({{"inserted", result.inserted}, {"duplicates", result.duplicates}, {"errors", errors}},
            "inserted " + std::to_string(result.inserted) + ", duplicates " + std::to_string(result.duplicates) +
                ", errors " + std::to_string(result.errors.size()));
    } else if (run_batch->parsed()) {
      auto model = std::make_shared<const FittedTopicModel>(artifact::load(model_path));
      TopicService service(std::make_shared<EmailStore>(store_path), make_provider(model->config.embed_provider),
                           resources(g));
      service.install_model(model);
      const auto job = service.run_batch(limit ? limit : 1000);
      print(to_json(job), "processed " + std::to_string(job.size) + " emails, " +
                              std::to_string(job.per_email_seconds) + " s/email");
    } else if (report->parsed()) {
      const auto r = EmailStore(store_path).monthly_report(month);
      std::ostringstream human;
      human << "Month " << r.month << '\n';
      for (const auto& [l, n] : r.by_label) human << "  " << l << ": " << n << '\n';
      print(to_json(r), human.str());
    } else if (hierarchy->parsed()) {
      const auto h = to_json(topicmodel::hierarchy(artifact::load(model_path)));
      if (output.empty()) {
        out << h.dump(g.json ? -1 : 2) << '\n';
      } else {
        std::ofstream f(output, std::ios::trunc);
        if (!f) throw Error("io_error", "cannot write " + output);
        f << h.dump(2) << '\n';
        print({{"leaves", h["leaves"]}, {"out", output}}, "wrote " + output);
      }
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    if (g.json) out << json{{"error", e.code()}, {"message", e.what()}}.dump() << '\n';
    return is_validation_error(e.code()) ? kExitValidation : kExitRuntime;
  } catch (const json::exception& e) {
    err << "invalid JSON: " << e.what() << '\n';
    if (g.json) out << json{{"error", "invalid_json"}, {"message", e.what()}}.dump() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    if (g.json) out << json{{"error", "runtime"}, {"message", e.what()}}.dump() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace mailtopics::cli
