#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mailtopics/error.hpp"
#include "mailtopics/linalg.hpp"

namespace mailtopics {

// Rows of an embedding batch are EmbeddingVectors, one per input text.
using EmbeddingVector = Vector;

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual int max_tokens() const = 0;

  /// Output row i embeds texts[i]. Inputs longer than max_tokens are truncated.
  virtual RowMatrix embed_batch(std::span<const std::string> texts) const = 0;
  virtual std::size_t count_tokens(std::string_view text) const = 0;

  EmbeddingVector embed(std::string_view text) const;
};

/// Hashed signed character trigrams, L2-normalized. Deterministic and
/// dependency-free; tokens are whitespace-delimited words.
class ReferenceProvider final : public EmbeddingProvider {
 public:
  explicit ReferenceProvider(int dim = 256, int max_tokens = 128);

  std::string name() const override { return "reference"; }
  int dim() const override { return dim_; }
  int max_tokens() const override { return max_tokens_; }
  RowMatrix embed_batch(std::span<const std::string> texts) const override;
  std::size_t count_tokens(std::string_view text) const override;

 private:
  int dim_;
  int max_tokens_;
};

// Raised when the remote service cannot be reached after all retries.
// Carries the half-open index range of the inputs that failed.
class EmbedTransportError : public Error {
 public:
  EmbedTransportError(std::size_t begin, std::size_t end, const std::string& message)
      : Error("embed_transport", message), begin_(begin), end_(end) {}
  std::size_t begin() const noexcept { return begin_; }
  std::size_t end() const noexcept { return end_; }
  bool retryable() const noexcept { return true; }

 private:
  std::size_t begin_;
  std::size_t end_;
};

struct RemoteProviderOptions {
  std::string url;  // e.g. http://embedder:8080
  int dim = 768;
  int max_tokens = 128;
  std::size_t batch_size = 64;
  int retries = 3;
  int max_in_flight = 4;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::seconds timeout{30};
};

/// Client for `POST /embed` with {"texts": [...]} -> {"vectors": [[...]], "dim": N}.
/// Requests are issued in chunks of batch_size with at most max_in_flight
/// concurrent; output order follows input order.
class RemoteProvider final : public EmbeddingProvider {
 public:
  explicit RemoteProvider(RemoteProviderOptions options);

  std::string name() const override { return "remote"; }
  int dim() const override { return options_.dim; }
  int max_tokens() const override { return options_.max_tokens; }
  RowMatrix embed_batch(std::span<const std::string> texts) const override;
  std::size_t count_tokens(std::string_view text) const override;

 private:
  RowMatrix request_chunk(std::span<const std::string> texts, std::size_t offset) const;

  RemoteProviderOptions options_;
};

/// Keeps the first max_tokens whitespace-delimited tokens, single-spaced.
std::string truncate_tokens(std::string_view text, int max_tokens);

/// "reference" or "remote"; the remote URL comes from MAILTOPICS_EMBED_URL.
std::shared_ptr<const EmbeddingProvider> make_provider(std::string_view kind);

}  // namespace mailtopics
