#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "preme/providers.h"
#include "preme/question_gen.h"
#include "preme/segmentation.h"
#include "preme/subject_network.h"

namespace preme {

inline constexpr int kQuestionnaireVersion = 1;

struct QuestionRecord {
  std::string text;
  std::string segment_id;
  std::optional<TurnRange> answer_span;
  int multiplicity = 1;  // number of generation calls that produced it

  friend bool operator==(const QuestionRecord&, const QuestionRecord&) = default;
};

struct AspectItem {
  std::string aspect;
  std::vector<std::string> question_ids;

  friend bool operator==(const AspectItem&, const AspectItem&) = default;
};

struct SubjectEntry {
  std::string subject;
  std::string segment_id;
  std::vector<AspectItem> aspects;

  const AspectItem* FindAspect(const std::string& aspect) const;
  std::vector<std::string> QuestionIds() const;  // distinct, first appearance

  friend bool operator==(const SubjectEntry&, const SubjectEntry&) = default;
};

struct Questionnaire {
  std::string meeting_id;
  std::vector<SubjectEntry> entries;
  std::map<std::string, QuestionRecord> questions;

  const SubjectEntry* FindEntry(const std::string& subject) const;

  friend bool operator==(const Questionnaire&, const Questionnaire&) = default;
};

// One entry per segment that produced a subject, in segment order. A subject
// text already used by an earlier entry (case-insensitive) gets the segment
// ordinal appended: "Design (2)". Each question is located once; locator
// failures leave answer_span empty and add a warning. Throws
// InconsistentInputs when the three per-segment lists do not line up.
Questionnaire Assemble(const Transcript& transcript,
                       const std::vector<Segment>& segments,
                       const std::vector<NormalizationResult>& normalization,
                       const std::vector<QuestionPool>& pools,
                       LocatorProvider* locator,
                       std::vector<std::string>* warnings = nullptr);

// With chosen aspects: questions under any of them, ordered by number of
// matched aspects, then multiplicity, then id. Without: every question of
// the entry, "(general)" ones first, then by multiplicity and id. Throws
// UnknownAspect for an aspect not in the entry.
std::vector<std::string> RankQuestions(const Questionnaire& questionnaire,
                                       const SubjectEntry& entry,
                                       const std::vector<std::string>& chosen_aspects);

nlohmann::json QuestionnaireToJson(const Questionnaire& questionnaire);
Questionnaire QuestionnaireFromJson(const nlohmann::json& j);

// Schema and invariant check; returns one message per problem. When
// `num_turns` is positive, answer spans must also lie within it.
std::vector<std::string> ValidateQuestionnaireJson(const nlohmann::json& j,
                                                   int num_turns = 0);

enum class SessionState { kAwaitSubject, kAwaitAspect, kShowQuestions, kShowAnswer };

std::string_view SessionStateName(SessionState state);

struct SessionView {
  SessionState state = SessionState::kAwaitSubject;
  std::string subject;
  std::vector<std::string> chosen_aspects;
  std::string question_id;

  friend bool operator==(const SessionView&, const SessionView&) = default;
};

struct Session {
  std::shared_ptr<const Questionnaire> questionnaire;
  SessionView view;
  std::vector<SessionView> history;  // views to return to on Back
};

struct UserEvent {
  enum class Kind { kSelectSubject, kSelectAspect, kShowQuestions, kSelectQuestion, kBack };
  Kind kind = Kind::kBack;
  std::string value;

  static UserEvent SelectSubject(std::string s) { return {Kind::kSelectSubject, std::move(s)}; }
  static UserEvent SelectAspect(std::string a) { return {Kind::kSelectAspect, std::move(a)}; }
  static UserEvent ShowQuestions() { return {Kind::kShowQuestions, {}}; }
  static UserEvent SelectQuestion(std::string q) { return {Kind::kSelectQuestion, std::move(q)}; }
  static UserEvent Back() { return {Kind::kBack, {}}; }
};

Session StartSession(std::shared_ptr<const Questionnaire> questionnaire);

// Pure transition. AwaitSubject -SelectSubject-> AwaitAspect
// -SelectAspect/ShowQuestions-> ShowQuestions (further SelectAspect narrows
// there) -SelectQuestion-> ShowAnswer; Back restores the previous view.
// Throws IllegalTransition, UnknownSubject, UnknownAspect or UnknownQuestion;
// the input session is never modified.
Session Step(const Session& session, const UserEvent& event);

// Ranked question ids for the current view (ShowQuestions / ShowAnswer).
std::vector<std::string> CurrentQuestions(const Session& session);

}  // namespace preme
