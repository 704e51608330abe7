#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "mailtopics/service.hpp"

namespace mailtopics {

struct ApiOptions {
  std::string token;  // when set, requests need "Authorization: Bearer <token>"
  std::filesystem::path static_dir;  // served under /ui when set
  std::size_t default_batch_limit = 1000;
};

/// HTTP JSON front end over a TopicService. Error bodies are
/// {"error": code, "message": text}; validation maps to 400, unknown ids to
/// 404, concurrent model changes and running batches to 409.
class ApiServer {
 public:
  ApiServer(TopicService& service, ApiOptions options = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Blocks until stop().
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it; follow with listen_after_bind().
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

int http_status_for(const std::string& error_code);

}  // namespace mailtopics
