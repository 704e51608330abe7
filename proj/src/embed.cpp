#include "mailtopics/embed.hpp"

#include <cctype>
#include <cstdlib>

#include "mailtopics/kernels.hpp"
#include "mailtopics/textprep.hpp"

namespace mailtopics {

EmbeddingVector EmbeddingProvider::embed(std::string_view text) const {
  const std::string s(text);
  const RowMatrix m = embed_batch(std::span<const std::string>(&s, 1));
  return m.row(0).transpose();
}

ReferenceProvider::ReferenceProvider(int dim, int max_tokens) : dim_(dim), max_tokens_(max_tokens) {
  if (dim < 1) throw Error("invalid_config", "embedding dim must be positive");
  if (max_tokens < 1) throw Error("invalid_config", "max_tokens must be positive");
}

RowMatrix ReferenceProvider::embed_batch(std::span<const std::string> texts) const {
  return kernels::parallel::hashed_trigram_embed(texts, dim_, max_tokens_);
}

std::size_t ReferenceProvider::count_tokens(std::string_view text) const { return textprep::count_words(text); }

std::string truncate_tokens(std::string_view text, int max_tokens) {
  std::string out;
  int n = 0;
  size_t i = 0;
  while (i < text.size() && n < max_tokens) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == text.size()) break;
    size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (!out.empty()) out.push_back(' ');
    out.append(text.substr(i, j - i));
    ++n;
    i = j;
  }
  return out;
}

std::shared_ptr<const EmbeddingProvider> make_provider(std::string_view kind) {
  if (kind == "reference") return std::make_shared<ReferenceProvider>();
  if (kind == "remote") {
    const char* url = std::getenv("MAILTOPICS_EMBED_URL");
    if (url == nullptr || *url == '\0') throw Error("invalid_config", "MAILTOPICS_EMBED_URL is not set");
    RemoteProviderOptions opts;
    opts.url = url;
    if (const char* dim = std::getenv("MAILTOPICS_EMBED_DIM")) opts.dim = std::atoi(dim);
    return std::make_shared<RemoteProvider>(opts);
  }
  throw Error("invalid_config", "unknown embedding provider '" + std::string(kind) + "'");
}

}  // namespace mailtopics
