#include "preme/service.h"

#include <regex>
#include <thread>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "preme/artifacts.h"
#include "preme/error.h"

namespace preme {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::regex kIdPattern(R"([A-Za-z0-9][A-Za-z0-9._-]*)");

ApiResponse ErrorResponse(int status, std::string_view code, const std::string& message) {
  return ApiResponse{status, json{{"error", std::string(code)}, {"message", message}}};
}

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIllegalTransition: return 409;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kUnknownSubject:
    case ErrorCode::kUnknownAspect:
    case ErrorCode::kUnknownQuestion:
    case ErrorCode::kMalformedInput: return 422;
    default: return 500;
  }
}

ApiResponse FromError(const Error& e) {
  return ErrorResponse(StatusFor(e.code()), ErrorCodeName(e.code()), e.what());
}

bool ValidId(const std::string& id) { return std::regex_match(id, kIdPattern) && id != ".."; }

json ParseBody(const std::string& body) {
  try {
    json j = json::parse(body.empty() ? "{}" : body);
    if (!j.is_object()) throw Error(ErrorCode::kMalformedInput, "body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("body: ") + e.what());
  }
}

json QuestionJson(const Questionnaire& q, const std::string& id) {
  const QuestionRecord& rec = q.questions.at(id);
  json span = nullptr;
  if (rec.answer_span) span = json::array({rec.answer_span->start, rec.answer_span->end});
  return json{{"id", id},
              {"text", rec.text},
              {"segment_id", rec.segment_id},
              {"answer_span", std::move(span)},
              {"multiplicity", rec.multiplicity}};
}

}  // namespace

json SessionToJson(const std::string& session_id, const std::string& meeting_id,
                   const Session& session) {
  const Questionnaire& q = *session.questionnaire;
  const SessionView& v = session.view;
  json subjects = json::array();
  for (const auto& e : q.entries) subjects.push_back(e.subject);
  json out{{"session_id", session_id},
           {"meeting_id", meeting_id},
           {"state", std::string(SessionStateName(v.state))},
           {"subjects", std::move(subjects)},
           {"subject", v.subject.empty() ? json(nullptr) : json(v.subject)},
           {"chosen_aspects", v.chosen_aspects},
           {"can_go_back", !session.history.empty()}};
  json aspects = json::array();
  if (const SubjectEntry* entry = v.subject.empty() ? nullptr : q.FindEntry(v.subject)) {
    for (const auto& a : entry->aspects) {
      aspects.push_back({{"aspect", a.aspect},
                         {"question_count", a.question_ids.size()}});
    }
  }
  out["aspects"] = std::move(aspects);
  json questions = json::array();
  for (const auto& id : CurrentQuestions(session)) questions.push_back(QuestionJson(q, id));
  out["questions"] = std::move(questions);
  out["question"] = v.state == SessionState::kShowAnswer ? QuestionJson(q, v.question_id)
                                                         : json(nullptr);
  return out;
}

QuestionnaireService::QuestionnaireService(fs::path dir) : dir_(std::move(dir)) {
  if (!fs::is_directory(dir_)) {
    throw Error(ErrorCode::kConfiguration,
                "questionnaire directory '" + dir_.string() + "' does not exist");
  }
}

ApiResponse QuestionnaireService::ListMeetings() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.is_directory() && fs::exists(entry.path() / "questionnaire.json")) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ApiResponse{200, json{{"meetings", ids}}};
}

std::shared_ptr<const Questionnaire> QuestionnaireService::LoadQuestionnaire(
    const std::string& meeting_id) {
  if (!ValidId(meeting_id)) {
    throw Error(ErrorCode::kNotFound, "unknown meeting '" + meeting_id + "'");
  }
  {
    std::lock_guard lock(mu_);
    auto it = questionnaires_.find(meeting_id);
    if (it != questionnaires_.end()) return it->second;
  }
  const fs::path path = dir_ / meeting_id / "questionnaire.json";
  if (!fs::exists(path)) throw Error(ErrorCode::kNotFound, "unknown meeting '" + meeting_id + "'");
  auto loaded = std::make_shared<const Questionnaire>(QuestionnaireFromJson(ReadJson(path)));
  std::lock_guard lock(mu_);
  return questionnaires_.emplace(meeting_id, std::move(loaded)).first->second;
}

ApiResponse QuestionnaireService::GetQuestionnaire(const std::string& meeting_id) {
  try {
    return ApiResponse{200, QuestionnaireToJson(*LoadQuestionnaire(meeting_id))};
  } catch (const Error& e) {
    return FromError(e);
  }
}

ApiResponse QuestionnaireService::GetTranscript(const std::string& meeting_id) const {
  const fs::path path = dir_ / meeting_id / "transcript.json";
  if (!ValidId(meeting_id) || !fs::exists(path)) {
    return ErrorResponse(404, "NotFound", "no transcript for '" + meeting_id + "'");
  }
  try {
    return ApiResponse{200, ReadJson(path)};
  } catch (const Error& e) {
    return FromError(e);
  }
}

ApiResponse QuestionnaireService::GetReports(const std::string& meeting_id) const {
  const fs::path path = dir_ / meeting_id / "reports.json";
  if (!ValidId(meeting_id) || !fs::exists(path)) {
    return ErrorResponse(404, "NotFound", "no reports for '" + meeting_id + "'");
  }
  try {
    return ApiResponse{200, ReadJson(path)};
  } catch (const Error& e) {
    return FromError(e);
  }
}

ApiResponse QuestionnaireService::CreateSession(const std::string& body) {
  try {
    const json j = ParseBody(body);
    if (!j.contains("meeting_id") || !j["meeting_id"].is_string()) {
      throw Error(ErrorCode::kMalformedInput, "body needs a string 'meeting_id'");
    }
    const std::string meeting_id = j["meeting_id"].get<std::string>();
    auto slot = std::make_shared<SessionSlot>();
    slot->meeting_id = meeting_id;
    slot->session = StartSession(LoadQuestionnaire(meeting_id));
    std::string id;
    {
      std::lock_guard lock(mu_);
      char buf[32];
      std::snprintf(buf, sizeof(buf), "s%06llu", static_cast<unsigned long long>(next_session_++));
      id = buf;
      sessions_.emplace(id, slot);
    }
    return ApiResponse{201, SessionToJson(id, meeting_id, slot->session)};
  } catch (const Error& e) {
    return FromError(e);
  }
}

std::shared_ptr<QuestionnaireService::SessionSlot> QuestionnaireService::FindSession(
    const std::string& session_id) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw Error(ErrorCode::kNotFound, "unknown session '" + session_id + "'");
  }
  return it->second;
}

ApiResponse QuestionnaireService::GetSession(const std::string& session_id) {
  try {
    auto slot = FindSession(session_id);
    std::lock_guard lock(slot->mu);
    return ApiResponse{200, SessionToJson(session_id, slot->meeting_id, slot->session)};
  } catch (const Error& e) {
    return FromError(e);
  }
}

ApiResponse QuestionnaireService::Apply(const std::string& session_id, const UserEvent& event) {
  try {
    auto slot = FindSession(session_id);
    std::lock_guard lock(slot->mu);
    Session next = Step(slot->session, event);
    slot->session = std::move(next);
    return ApiResponse{200, SessionToJson(session_id, slot->meeting_id, slot->session)};
  } catch (const Error& e) {
    return FromError(e);
  }
}

ApiResponse QuestionnaireService::Select(const std::string& session_id,
                                         const std::string& body) {
  json j;
  try {
    j = ParseBody(body);
  } catch (const Error& e) {
    return FromError(e);
  }
  if (j.size() != 1) {
    return ErrorResponse(422, "MalformedInput",
                         "body needs exactly one of 'subject', 'aspect', 'question'");
  }
  const std::string key = j.begin().key();
  const json& value = j.begin().value();
  if (!value.is_string()) {
    return ErrorResponse(422, "MalformedInput", "'" + key + "' must be a string");
  }
  const std::string v = value.get<std::string>();
  if (key == "subject") return Apply(session_id, UserEvent::SelectSubject(v));
  if (key == "aspect") return Apply(session_id, UserEvent::SelectAspect(v));
  if (key == "question") return Apply(session_id, UserEvent::SelectQuestion(v));
  return ErrorResponse(422, "MalformedInput", "unknown selection '" + key + "'");
}

ApiResponse QuestionnaireService::ShowQuestions(const std::string& session_id) {
  return Apply(session_id, UserEvent::ShowQuestions());
}

ApiResponse QuestionnaireService::Back(const std::string& session_id) {
  return Apply(session_id, UserEvent::Back());
}

ApiResponse QuestionnaireService::Handle(const std::string& method, const std::string& path,
                                         const std::string& body) {
  static const std::regex meeting(R"(^/api/meetings/([^/]+)/(questionnaire|transcript|reports)$)");
  static const std::regex session(R"(^/api/sessions/([^/]+)(/(select|show|back))?$)");
  std::smatch m;
  if (method == "GET" && path == "/api/meetings") return ListMeetings();
  if (method == "POST" && path == "/api/sessions") return CreateSession(body);
  if (method == "GET" && std::regex_match(path, m, meeting)) {
    if (m[2] == "questionnaire") return GetQuestionnaire(m[1]);
    if (m[2] == "transcript") return GetTranscript(m[1]);
    return GetReports(m[1]);
  }
  if (std::regex_match(path, m, session)) {
    const std::string id = m[1];
    const std::string action = m[3];
    if (method == "GET" && action.empty()) return GetSession(id);
    if (method == "POST" && action == "select") return Select(id, body);
    if (method == "POST" && action == "show") return ShowQuestions(id);
    if (method == "POST" && action == "back") return Back(id);
  }
  return ErrorResponse(404, "NotFound", method + " " + path);
}

struct ApiServer::Impl {
  std::shared_ptr<QuestionnaireService> service;
  httplib::Server server;
  std::thread thread;
};

ApiServer::ApiServer(std::shared_ptr<QuestionnaireService> service)
    : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  auto handler = [svc = impl_->service](const httplib::Request& req, httplib::Response& res) {
    ApiResponse r = svc->Handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body.dump(), "application/json");
  };
  auto& s = impl_->server;
  s.Get(R"(/api/.*)", handler);
  s.Post(R"(/api/.*)", handler);
  s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(json{{"error", "NotFound"}, {"message", req.method + " " + req.path}}.dump(),
                      "application/json");
    }
  });
}

ApiServer::~ApiServer() { Stop(); }

int ApiServer::Start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::kConfiguration, "cannot bind " + host);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void ApiServer::Run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw Error(ErrorCode::kConfiguration,
                "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void ApiServer::Stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace preme
