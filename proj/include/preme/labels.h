#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace preme {

// BIO scheme over the two span classes. O has the smallest id so that
// smallest-id tie breaking favors "no span".
enum class Label : int {
  kO = 0,
  kBeginSubject = 1,
  kInsideSubject = 2,
  kBeginAspect = 3,
  kInsideAspect = 4,
};

inline constexpr int kNumLabels = 5;

inline constexpr std::array<Label, kNumLabels> kAllLabels = {
    Label::kO, Label::kBeginSubject, Label::kInsideSubject, Label::kBeginAspect,
    Label::kInsideAspect};

enum class SpanClass { kSubject, kAspect };

// Collapsed token class used for evaluation: subject, aspect or N/A.
enum class TokenClass { kSubject = 0, kAspect = 1, kNone = 2 };

std::string_view LabelName(Label label);
std::optional<Label> ParseLabel(std::string_view name);

std::optional<SpanClass> ClassOf(Label label);
TokenClass CollapsedClass(Label label);
bool IsBegin(Label label);
bool IsInside(Label label);

struct Span {
  int begin = 0;  // token index, inclusive
  int end = 0;    // token index, exclusive

  int size() const { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

struct SpanSet {
  std::vector<Span> subjects;
  std::vector<Span> aspects;

  friend bool operator==(const SpanSet&, const SpanSet&) = default;
};

// True iff no I-x follows O, start of sequence, or a different class.
bool SatisfiesBio(const std::vector<Label>& labels);

// Promotes every orphan I-x to B-x. Returns the positions repaired.
std::vector<int> RepairBio(std::vector<Label>& labels);

// Spans are maximal B-x I-x* runs. An orphan I-x opens a new span, matching
// what RepairBio would produce.
SpanSet SpansFromLabels(const std::vector<Label>& labels);

// Inverse of SpansFromLabels for non-overlapping span sets.
std::vector<Label> LabelsFromSpans(const SpanSet& spans, int length);

std::string SpanText(const std::vector<std::string>& tokens, const Span& span);

}  // namespace preme
