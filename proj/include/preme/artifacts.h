#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "preme/question_gen.h"
#include "preme/segmentation.h"
#include "preme/tagger.h"

namespace preme {

inline constexpr int kArtifactVersion = 1;

nlohmann::json SegmentsToJson(const std::vector<Segment>& segments);
std::vector<Segment> SegmentsFromJson(const nlohmann::json& j);

nlohmann::json PoolsToJson(const std::vector<QuestionPool>& pools);
std::vector<QuestionPool> PoolsFromJson(const nlohmann::json& j);

// Spans are not stored; they are rebuilt from the labels on load.
nlohmann::json TaggedToJson(const std::vector<std::vector<TaggedQuestion>>& per_segment);
std::vector<std::vector<TaggedQuestion>> TaggedFromJson(const nlohmann::json& j);

// Wraps any json exception as MalformedInput naming `what`.
template <typename Fn>
auto ParseArtifact(const std::string& what, Fn&& fn) -> decltype(fn());

std::string ReadFile(const std::filesystem::path& path);
// Writes `content` next to `path` and renames it into place.
void WriteFileAtomic(const std::filesystem::path& path, const std::string& content);
void WriteJson(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json ReadJson(const std::filesystem::path& path);

}  // namespace preme

#include "preme/error.h"

namespace preme {

template <typename Fn>
auto ParseArtifact(const std::string& what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, what + ": " + e.what());
  }
}

}  // namespace preme
