#pragma once

#include <filesystem>
#include <string>

#include "mailtopics/topicmodel.hpp"

namespace mailtopics::artifact {

// Binary model container:
//   "TQM1" | u32 version | sections... | u32 CRC-32 of all preceding bytes
// Each section is a u64 little-endian byte length followed by its payload.
// Section order: manifest (config JSON), reducer, clusters, c-TF-IDF
// (A, f(t), class sizes, class tf CSR, W CSR), vocabulary, label maps (JSON),
// training corpus.
inline constexpr char kMagic[4] = {'T', 'Q', 'M', '1'};

std::string serialize(const FittedTopicModel& model);
FittedTopicModel deserialize(std::string_view bytes);

/// Writes to a sibling temp file and renames it into place.
void save(const FittedTopicModel& model, const std::filesystem::path& path);
FittedTopicModel load(const std::filesystem::path& path);

}  // namespace mailtopics::artifact
