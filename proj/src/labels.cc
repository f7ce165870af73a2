#include "preme/labels.h"

#include <algorithm>

#include "preme/error.h"
#include "preme/text.h"

namespace preme {

std::string_view LabelName(Label label) {
  switch (label) {
    case Label::kO: return "O";
    case Label::kBeginSubject: return "B-SUBJ";
    case Label::kInsideSubject: return "I-SUBJ";
    case Label::kBeginAspect: return "B-ASP";
    case Label::kInsideAspect: return "I-ASP";
  }
  return "O";
}

std::optional<Label> ParseLabel(std::string_view name) {
  for (Label l : kAllLabels) {
    if (LabelName(l) == name) return l;
  }
  return std::nullopt;
}

std::optional<SpanClass> ClassOf(Label label) {
  switch (label) {
    case Label::kBeginSubject:
    case Label::kInsideSubject:
      return SpanClass::kSubject;
    case Label::kBeginAspect:
    case Label::kInsideAspect:
      return SpanClass::kAspect;
    case Label::kO:
      break;
  }
  return std::nullopt;
}

TokenClass CollapsedClass(Label label) {
  auto cls = ClassOf(label);
  if (!cls) return TokenClass::kNone;
  return *cls == SpanClass::kSubject ? TokenClass::kSubject : TokenClass::kAspect;
}

bool IsBegin(Label label) {
  return label == Label::kBeginSubject || label == Label::kBeginAspect;
}

bool IsInside(Label label) {
  return label == Label::kInsideSubject || label == Label::kInsideAspect;
}

namespace {

bool IsOrphan(const std::vector<Label>& labels, size_t i) {
  if (!IsInside(labels[i])) return false;
  if (i == 0) return true;
  return ClassOf(labels[i - 1]) != ClassOf(labels[i]);
}

Label BeginOf(SpanClass cls) {
  return cls == SpanClass::kSubject ? Label::kBeginSubject : Label::kBeginAspect;
}

Label InsideOf(SpanClass cls) {
  return cls == SpanClass::kSubject ? Label::kInsideSubject
                                    : Label::kInsideAspect;
}

}  // namespace

bool SatisfiesBio(const std::vector<Label>& labels) {
  for (size_t i = 0; i < labels.size(); ++i) {
    if (IsOrphan(labels, i)) return false;
  }
  return true;
}

std::vector<int> RepairBio(std::vector<Label>& labels) {
  std::vector<int> repaired;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (IsOrphan(labels, i)) {
      labels[i] = BeginOf(*ClassOf(labels[i]));
      repaired.push_back(static_cast<int>(i));
    }
  }
  return repaired;
}

SpanSet SpansFromLabels(const std::vector<Label>& labels) {
  SpanSet out;
  const int n = static_cast<int>(labels.size());
  int i = 0;
  while (i < n) {
    auto cls = ClassOf(labels[i]);
    if (!cls) {
      ++i;
      continue;
    }
    int j = i + 1;
    while (j < n && labels[j] == InsideOf(*cls)) ++j;
    auto& bucket = *cls == SpanClass::kSubject ? out.subjects : out.aspects;
    bucket.push_back(Span{i, j});
    i = j;
  }
  return out;
}

std::vector<Label> LabelsFromSpans(const SpanSet& spans, int length) {
  std::vector<Label> labels(static_cast<size_t>(length), Label::kO);
  auto paint = [&](const std::vector<Span>& list, SpanClass cls) {
    for (const Span& s : list) {
      if (s.begin < 0 || s.end > length || s.begin >= s.end) {
        throw Error(ErrorCode::kMalformedInput, "span out of range");
      }
      for (int k = s.begin; k < s.end; ++k) {
        if (labels[k] != Label::kO) {
          throw Error(ErrorCode::kMalformedInput, "overlapping spans");
        }
        labels[k] = k == s.begin ? BeginOf(cls) : InsideOf(cls);
      }
    }
  };
  paint(spans.subjects, SpanClass::kSubject);
  paint(spans.aspects, SpanClass::kAspect);
  return labels;
}

std::string SpanText(const std::vector<std::string>& tokens, const Span& span) {
  std::vector<std::string> parts(tokens.begin() + span.begin,
                                 tokens.begin() + span.end);
  return Detokenize(parts);
}

}  // namespace preme
