#include "preme/questionnaire.h"

#include <algorithm>
#include <set>

#include <spdlog/spdlog.h>

#include "preme/error.h"
#include "preme/text.h"

namespace preme {

using nlohmann::json;

const AspectItem* SubjectEntry::FindAspect(const std::string& aspect) const {
  const std::string key = CaseFold(aspect);
  for (const auto& a : aspects) {
    if (CaseFold(a.aspect) == key) return &a;
  }
  return nullptr;
}

std::vector<std::string> SubjectEntry::QuestionIds() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& a : aspects) {
    for (const auto& id : a.question_ids) {
      if (seen.insert(id).second) out.push_back(id);
    }
  }
  return out;
}

const SubjectEntry* Questionnaire::FindEntry(const std::string& subject) const {
  const std::string key = CaseFold(subject);
  for (const auto& e : entries) {
    if (CaseFold(e.subject) == key) return &e;
  }
  return nullptr;
}

Questionnaire Assemble(const Transcript& transcript,
                       const std::vector<Segment>& segments,
                       const std::vector<NormalizationResult>& normalization,
                       const std::vector<QuestionPool>& pools,
                       LocatorProvider* locator,
                       std::vector<std::string>* warnings) {
  if (segments.size() != normalization.size() || segments.size() != pools.size()) {
    throw Error(ErrorCode::kInconsistentInputs,
                "need one normalization result and one pool per segment");
  }
  std::vector<size_t> order(segments.size());
  for (size_t i = 0; i < order.size(); ++i) {
    if (normalization[i].segment_id != segments[i].segment_id ||
        pools[i].segment_id != segments[i].segment_id) {
      throw Error(ErrorCode::kInconsistentInputs,
                  "segment " + segments[i].segment_id + " does not line up");
    }
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return segments[a].turns.start < segments[b].turns.start;
  });

  auto warn = [&](const std::string& message) {
    spdlog::warn("{}", message);
    if (warnings) warnings->push_back(message);
  };

  Questionnaire q;
  q.meeting_id = transcript.meeting_id;
  std::set<std::string> used_subjects;
  for (size_t rank = 0; rank < order.size(); ++rank) {
    const size_t i = order[rank];
    const NormalizationResult& norm = normalization[i];
    if (!norm.has_subject()) continue;

    std::map<std::string, const PooledQuestion*> pooled;
    for (const auto& pq : pools[i].questions) pooled[pq.id] = &pq;

    SubjectEntry entry;
    entry.segment_id = segments[i].segment_id;
    entry.subject = norm.subject();
    if (used_subjects.count(CaseFold(entry.subject)) > 0) {
      entry.subject += " (" + std::to_string(rank + 1) + ")";
    }
    used_subjects.insert(CaseFold(entry.subject));

    for (const AspectEntry& a : norm.aspects) {
      AspectItem item{a.aspect, {}};
      for (const auto& id : a.question_ids) {
        auto it = pooled.find(id);
        if (it == pooled.end()) {
          throw Error(ErrorCode::kInconsistentInputs,
                      "question " + id + " is not in the pool of " + entry.segment_id);
        }
        item.question_ids.push_back(id);
        if (q.questions.count(id) > 0) continue;
        QuestionRecord rec;
        rec.text = it->second->text;
        rec.segment_id = entry.segment_id;
        rec.multiplicity = static_cast<int>(it->second->provenance.size());
        if (locator != nullptr) {
          try {
            auto ranges = locator->Locate(rec.text, transcript);
            if (!ranges.empty() && ranges.front().start >= 0 &&
                ranges.front().end <= transcript.size() &&
                ranges.front().start < ranges.front().end) {
              rec.answer_span = ranges.front();
            } else if (!ranges.empty()) {
              warn("locator returned an out-of-range span for " + id);
            }
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kProviderUnavailable) throw;
            warn("no answer span for " + id + ": " + e.what());
          }
        }
        q.questions.emplace(id, std::move(rec));
      }
      if (!item.question_ids.empty()) entry.aspects.push_back(std::move(item));
    }
    q.entries.push_back(std::move(entry));
  }
  return q;
}

std::vector<std::string> RankQuestions(const Questionnaire& questionnaire,
                                       const SubjectEntry& entry,
                                       const std::vector<std::string>& chosen_aspects) {
  auto multiplicity = [&](const std::string& id) {
    auto it = questionnaire.questions.find(id);
    return it == questionnaire.questions.end() ? 0 : it->second.multiplicity;
  };
  std::map<std::string, int> matches;
  if (chosen_aspects.empty()) {
    const AspectItem* general = entry.FindAspect(kGeneralAspect);
    for (const auto& id : entry.QuestionIds()) matches[id] = 0;
    if (general) {
      for (const auto& id : general->question_ids) matches[id] = 1;
    }
  } else {
    std::set<std::string> distinct;
    for (const auto& name : chosen_aspects) {
      const AspectItem* a = entry.FindAspect(name);
      if (a == nullptr) {
        throw Error(ErrorCode::kUnknownAspect,
                    "'" + name + "' is not an aspect of '" + entry.subject + "'");
      }
      if (!distinct.insert(CaseFold(name)).second) continue;
      for (const auto& id : a->question_ids) matches[id] += 1;
    }
  }
  std::vector<std::string> ids;
  for (const auto& [id, _] : matches) ids.push_back(id);
  std::sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
    if (matches[a] != matches[b]) return matches[a] > matches[b];
    if (multiplicity(a) != multiplicity(b)) return multiplicity(a) > multiplicity(b);
    return a < b;
  });
  return ids;
}

json QuestionnaireToJson(const Questionnaire& questionnaire) {
  json entries = json::array();
  for (const auto& e : questionnaire.entries) {
    json aspects = json::array();
    for (const auto& a : e.aspects) {
      aspects.push_back({{"aspect", a.aspect}, {"question_ids", a.question_ids}});
    }
    entries.push_back({{"subject", e.subject},
                       {"segment_id", e.segment_id},
                       {"aspects", std::move(aspects)}});
  }
  json questions = json::object();
  for (const auto& [id, rec] : questionnaire.questions) {
    json span = nullptr;
    if (rec.answer_span) span = json::array({rec.answer_span->start, rec.answer_span->end});
    questions[id] = {{"text", rec.text},
                     {"segment_id", rec.segment_id},
                     {"answer_span", std::move(span)},
                     {"multiplicity", rec.multiplicity}};
  }
  return json{{"version", kQuestionnaireVersion},
              {"meeting_id", questionnaire.meeting_id},
              {"entries", std::move(entries)},
              {"questions", std::move(questions)}};
}

Questionnaire QuestionnaireFromJson(const json& j) {
  const auto problems = ValidateQuestionnaireJson(j);
  if (!problems.empty()) {
    throw Error(ErrorCode::kMalformedInput, "questionnaire: " + problems.front());
  }
  Questionnaire q;
  q.meeting_id = j.at("meeting_id").get<std::string>();
  for (const auto& e : j.at("entries")) {
    SubjectEntry entry;
    entry.subject = e.at("subject").get<std::string>();
    entry.segment_id = e.at("segment_id").get<std::string>();
    for (const auto& a : e.at("aspects")) {
      entry.aspects.push_back(AspectItem{a.at("aspect").get<std::string>(),
                                         a.at("question_ids").get<std::vector<std::string>>()});
    }
    q.entries.push_back(std::move(entry));
  }
  for (const auto& [id, rec] : j.at("questions").items()) {
    QuestionRecord r;
    r.text = rec.at("text").get<std::string>();
    r.segment_id = rec.at("segment_id").get<std::string>();
    if (!rec.at("answer_span").is_null()) {
      r.answer_span = TurnRange{rec["answer_span"][0].get<int>(), rec["answer_span"][1].get<int>()};
    }
    r.multiplicity = rec.value("multiplicity", 1);
    q.questions.emplace(id, std::move(r));
  }
  return q;
}

std::vector<std::string> ValidateQuestionnaireJson(const json& j, int num_turns) {
  std::vector<std::string> problems;
  auto need = [&](const json& obj, const char* key, json::value_t type,
                  const std::string& where) -> bool {
    if (!obj.is_object() || !obj.contains(key)) {
      problems.push_back(where + ": missing '" + key + "'");
      return false;
    }
    const auto t = obj.at(key).type();
    const bool ok = t == type || (type == json::value_t::number_integer &&
                                  t == json::value_t::number_unsigned);
    if (!ok) problems.push_back(where + ": '" + key + "' has the wrong type");
    return ok;
  };
  if (!j.is_object()) return {"top level is not an object"};
  if (need(j, "version", json::value_t::number_integer, "root") &&
      j["version"].get<int>() != kQuestionnaireVersion) {
    problems.push_back("unsupported version");
  }
  need(j, "meeting_id", json::value_t::string, "root");
  const bool has_questions = need(j, "questions", json::value_t::object, "root");
  std::set<std::string> referenced;
  std::set<std::string> subjects;
  if (need(j, "entries", json::value_t::array, "root")) {
    for (size_t e = 0; e < j["entries"].size(); ++e) {
      const json& entry = j["entries"][e];
      const std::string where = "entries[" + std::to_string(e) + "]";
      if (need(entry, "subject", json::value_t::string, where) &&
          !subjects.insert(CaseFold(entry["subject"].get<std::string>())).second) {
        problems.push_back(where + ": duplicate subject");
      }
      need(entry, "segment_id", json::value_t::string, where);
      if (!need(entry, "aspects", json::value_t::array, where)) continue;
      for (size_t a = 0; a < entry["aspects"].size(); ++a) {
        const json& asp = entry["aspects"][a];
        const std::string aw = where + ".aspects[" + std::to_string(a) + "]";
        need(asp, "aspect", json::value_t::string, aw);
        if (!need(asp, "question_ids", json::value_t::array, aw)) continue;
        if (asp["question_ids"].empty()) problems.push_back(aw + ": no questions");
        for (const auto& id : asp["question_ids"]) {
          if (!id.is_string()) {
            problems.push_back(aw + ": non-string question id");
            continue;
          }
          referenced.insert(id.get<std::string>());
          if (has_questions && !j["questions"].contains(id.get<std::string>())) {
            problems.push_back(aw + ": unknown question " + id.get<std::string>());
          }
        }
      }
    }
  }
  if (has_questions) {
    for (const auto& [id, rec] : j["questions"].items()) {
      const std::string where = "questions." + id;
      need(rec, "text", json::value_t::string, where);
      need(rec, "segment_id", json::value_t::string, where);
      if (!rec.is_object() || !rec.contains("answer_span")) {
        problems.push_back(where + ": missing 'answer_span'");
      } else if (!rec["answer_span"].is_null()) {
        const json& span = rec["answer_span"];
        if (!span.is_array() || span.size() != 2 || !span[0].is_number_integer() ||
            !span[1].is_number_integer()) {
          problems.push_back(where + ": answer_span must be [start, end] or null");
        } else {
          const int s = span[0].get<int>();
          const int e = span[1].get<int>();
          if (s < 0 || s >= e || (num_turns > 0 && e > num_turns)) {
            problems.push_back(where + ": answer_span outside the transcript");
          }
        }
      }
      if (rec.is_object() && rec.contains("multiplicity") &&
          !rec["multiplicity"].is_number_integer()) {
        problems.push_back(where + ": 'multiplicity' has the wrong type");
      }
      if (referenced.count(id) == 0) {
        problems.push_back(where + ": not referenced by any aspect");
      }
    }
  }
  return problems;
}

std::string_view SessionStateName(SessionState state) {
  switch (state) {
    case SessionState::kAwaitSubject: return "AwaitSubject";
    case SessionState::kAwaitAspect: return "AwaitAspect";
    case SessionState::kShowQuestions: return "ShowQuestions";
    case SessionState::kShowAnswer: return "ShowAnswer";
  }
  return "AwaitSubject";
}

Session StartSession(std::shared_ptr<const Questionnaire> questionnaire) {
  if (!questionnaire) {
    throw Error(ErrorCode::kInconsistentInputs, "session needs a questionnaire");
  }
  Session s;
  s.questionnaire = std::move(questionnaire);
  return s;
}

namespace {

[[noreturn]] void Illegal(const SessionView& view, std::string_view event) {
  throw Error(ErrorCode::kIllegalTransition,
              std::string(event) + " is not allowed in state " +
                  std::string(SessionStateName(view.state)));
}

const SubjectEntry& CurrentEntry(const Session& s) {
  const SubjectEntry* entry = s.questionnaire->FindEntry(s.view.subject);
  if (entry == nullptr) {
    throw Error(ErrorCode::kUnknownSubject, "'" + s.view.subject + "'");
  }
  return *entry;
}

}  // namespace

std::vector<std::string> CurrentQuestions(const Session& session) {
  if (session.view.state != SessionState::kShowQuestions &&
      session.view.state != SessionState::kShowAnswer) {
    return {};
  }
  return RankQuestions(*session.questionnaire, CurrentEntry(session),
                       session.view.chosen_aspects);
}

Session Step(const Session& session, const UserEvent& event) {
  using Kind = UserEvent::Kind;
  Session next = session;
  SessionView& v = next.view;
  switch (event.kind) {
    case Kind::kBack:
      if (session.history.empty()) Illegal(session.view, "Back");
      next.view = session.history.back();
      next.history.pop_back();
      return next;
    case Kind::kSelectSubject: {
      if (v.state != SessionState::kAwaitSubject) Illegal(v, "SelectSubject");
      const SubjectEntry* entry = session.questionnaire->FindEntry(event.value);
      if (entry == nullptr) {
        throw Error(ErrorCode::kUnknownSubject, "'" + event.value + "'");
      }
      v.subject = entry->subject;
      v.state = SessionState::kAwaitAspect;
      break;
    }
    case Kind::kSelectAspect: {
      if (v.state != SessionState::kAwaitAspect &&
          v.state != SessionState::kShowQuestions) {
        Illegal(v, "SelectAspect");
      }
      const AspectItem* aspect = CurrentEntry(session).FindAspect(event.value);
      if (aspect == nullptr) {
        throw Error(ErrorCode::kUnknownAspect,
                    "'" + event.value + "' is not an aspect of '" + v.subject + "'");
      }
      if (std::find(v.chosen_aspects.begin(), v.chosen_aspects.end(),
                    aspect->aspect) == v.chosen_aspects.end()) {
        v.chosen_aspects.push_back(aspect->aspect);
      }
      v.state = SessionState::kShowQuestions;
      break;
    }
    case Kind::kShowQuestions:
      if (v.state != SessionState::kAwaitAspect) Illegal(v, "ShowQuestions");
      v.state = SessionState::kShowQuestions;
      break;
    case Kind::kSelectQuestion: {
      if (v.state != SessionState::kShowQuestions) Illegal(v, "SelectQuestion");
      const auto ranked = CurrentQuestions(session);
      if (std::find(ranked.begin(), ranked.end(), event.value) == ranked.end()) {
        throw Error(ErrorCode::kUnknownQuestion,
                    "'" + event.value + "' is not among the listed questions");
      }
      v.question_id = event.value;
      v.state = SessionState::kShowAnswer;
      break;
    }
  }
  next.history.push_back(session.view);
  return next;
}

}  // namespace preme
