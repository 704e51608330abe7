#include <atomic>
#include <mutex>
#include <optional>
#include <thread>

// Eigen must precede httplib: <resolv.h> defines a _res macro.
#include "mailtopics/embed.hpp"
#include "mailtopics/textprep.hpp"

#include <httplib.h>
#include <json.hpp>

namespace mailtopics {

namespace {

// Splits "http://host:port/prefix" into ("http://host:port", "/prefix").
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

}  // namespace

RemoteProvider::RemoteProvider(RemoteProviderOptions options) : options_(std::move(options)) {
  if (options_.url.empty()) throw Error("invalid_config", "remote embedding URL is empty");
  if (options_.batch_size == 0 || options_.max_in_flight < 1 || options_.dim < 1)
    throw Error("invalid_config", "remote embedding options out of range");
}

std::size_t RemoteProvider::count_tokens(std::string_view text) const { return textprep::count_words(text); }

RowMatrix RemoteProvider::request_chunk(std::span<const std::string> texts, std::size_t offset) const {
  const auto [base, prefix] = split_url(options_.url);
  httplib::Client client(base);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);

  nlohmann::json body;
  body["texts"] = nlohmann::json::array();
  for (const auto& t : texts) body["texts"].push_back(truncate_tokens(t, options_.max_tokens));
  const std::string payload = body.dump();

  std::string last_error = "no attempt";
  auto backoff = options_.initial_backoff;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = client.Post(prefix + "/embed", payload, "application/json");
    if (!res) {
      last_error = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "server status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error("embed_protocol", "embedding service returned status " + std::to_string(res->status));
    }
    const auto json = nlohmann::json::parse(res->body, nullptr, false);
    if (json.is_discarded() || !json.contains("vectors") || !json["vectors"].is_array())
      throw Error("embed_protocol", "malformed embedding response");
    const auto& vectors = json["vectors"];
    if (vectors.size() != texts.size()) throw Error("embed_protocol", "embedding count does not match request");
    if (json.contains("dim") && json["dim"].get<int>() != options_.dim)
      throw Error("embed_protocol", "embedding dim " + std::to_string(json["dim"].get<int>()) + " != configured " +
                                        std::to_string(options_.dim));
    RowMatrix out(static_cast<Eigen::Index>(texts.size()), options_.dim);
    for (size_t i = 0; i < vectors.size(); ++i) {
      if (!vectors[i].is_array() || vectors[i].size() != static_cast<size_t>(options_.dim))
        throw Error("embed_protocol", "embedding row has wrong length");
      for (int d = 0; d < options_.dim; ++d) out(static_cast<Eigen::Index>(i), d) = vectors[i][d].get<double>();
    }
    return out;
  }
  throw EmbedTransportError(offset, offset + texts.size(), last_error);
}

RowMatrix RemoteProvider::embed_batch(std::span<const std::string> texts) const {
  RowMatrix out(static_cast<Eigen::Index>(texts.size()), options_.dim);
  if (texts.empty()) return out;
  const std::size_t chunks = (texts.size() + options_.batch_size - 1) / options_.batch_size;
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::optional<std::pair<std::size_t, std::exception_ptr>> first_error;

  auto worker = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) {
      const std::size_t begin = c * options_.batch_size;
      const std::size_t len = std::min(options_.batch_size, texts.size() - begin);
      try {
        RowMatrix part = request_chunk(texts.subspan(begin, len), begin);
        out.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(len)) = part;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error || c < first_error->first) first_error = {{c, std::current_exception()}};
      }
    }
  };
  const auto workers = std::min<std::size_t>(chunks, static_cast<std::size_t>(options_.max_in_flight));
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();
  if (first_error) std::rethrow_exception(first_error->second);
  return out;
}

}  // namespace mailtopics
