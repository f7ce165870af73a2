#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "preme/labels.h"

namespace preme {

enum class Category { kAcademic, kCommittee, kProduct, kOther };

std::string_view CategoryName(Category category);
Category ParseCategory(std::string_view name);  // unknown -> kOther

struct Turn {
  int index = 0;
  std::string speaker;
  std::string text;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Transcript {
  std::string meeting_id;
  Category category = Category::kOther;
  std::vector<Turn> turns;
  // Turns whose text is empty after trimming.
  std::vector<int> degenerate_turns;

  int size() const { return static_cast<int>(turns.size()); }
  friend bool operator==(const Transcript&, const Transcript&) = default;
};

// Half-open range of turn indices.
struct TurnRange {
  int start = 0;
  int end = 0;

  int size() const { return end - start; }
  friend bool operator==(const TurnRange&, const TurnRange&) = default;
  friend auto operator<=>(const TurnRange&, const TurnRange&) = default;
};

enum class TranscriptFormat { kQmsumJson, kPlainTurns };

// Throws Error{kMalformedInput} on bad UTF-8, bad JSON, missing fields or
// empty speakers, and Error{kEmptyTranscript} when no turns remain.
// `meeting_id` is used unless the JSON carries its own "meeting_id".
Transcript ParseTranscript(std::string_view raw, TranscriptFormat format,
                           std::string_view meeting_id);

// QMSUM-shaped JSON plus "meeting_id" and "category"; ParseTranscript with
// kQmsumJson reads it back to an equal value.
nlohmann::json TranscriptToJson(const Transcript& transcript);
Transcript TranscriptFromJson(const nlohmann::json& j,
                              std::string_view fallback_id);

std::string TranscriptToPlainTurns(const Transcript& transcript);

struct AnnotatedQuestion {
  std::vector<std::string> tokens;
  std::vector<std::string> pos;
  std::vector<Label> labels;

  int size() const { return static_cast<int>(tokens.size()); }
  friend bool operator==(const AnnotatedQuestion&,
                         const AnnotatedQuestion&) = default;
};

struct AnnotationWarning {
  int question = 0;  // index into the parsed list
  int position = 0;  // token position that was repaired
  std::string message;
};

struct AnnotationSet {
  std::vector<AnnotatedQuestion> questions;
  std::vector<AnnotationWarning> warnings;
};

// CoNLL-style: one "TOKEN<TAB>POS<TAB>LABEL" line per token, blank line
// between questions. Orphan I-x labels are promoted to B-x with a warning.
AnnotationSet ParseAnnotations(std::string_view raw);

std::string SerializeAnnotations(const std::vector<AnnotatedQuestion>& items);

bool IsValidUtf8(std::string_view bytes);

}  // namespace preme
