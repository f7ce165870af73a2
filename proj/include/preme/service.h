#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "json.hpp"
#include "preme/questionnaire.h"

namespace preme {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// Transport-independent API over a directory laid out as
// <dir>/<meeting_id>/{questionnaire,transcript,reports}.json. Questionnaires
// are loaded on first use and never change afterwards; each session is
// guarded by its own mutex and a rejected event leaves it untouched.
class QuestionnaireService {
 public:
  explicit QuestionnaireService(std::filesystem::path dir);

  ApiResponse ListMeetings() const;
  ApiResponse GetQuestionnaire(const std::string& meeting_id);
  ApiResponse GetTranscript(const std::string& meeting_id) const;
  ApiResponse GetReports(const std::string& meeting_id) const;
  ApiResponse CreateSession(const std::string& body);
  ApiResponse GetSession(const std::string& session_id);
  // body: exactly one of {"subject"}, {"aspect"}, {"question"}
  ApiResponse Select(const std::string& session_id, const std::string& body);
  ApiResponse ShowQuestions(const std::string& session_id);
  ApiResponse Back(const std::string& session_id);

  // Routes "METHOD /path" with a raw body; 404 for unknown routes.
  ApiResponse Handle(const std::string& method, const std::string& path,
                     const std::string& body);

 private:
  struct SessionSlot {
    std::mutex mu;
    std::string meeting_id;
    Session session;
  };

  std::shared_ptr<const Questionnaire> LoadQuestionnaire(const std::string& meeting_id);
  std::shared_ptr<SessionSlot> FindSession(const std::string& session_id);
  ApiResponse Apply(const std::string& session_id, const UserEvent& event);

  std::filesystem::path dir_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const Questionnaire>> questionnaires_;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
  uint64_t next_session_ = 1;
};

// JSON view of a session: state, subject, chosen aspects, the subjects or
// aspects on offer, the ranked questions and the selected question.
nlohmann::json SessionToJson(const std::string& session_id, const std::string& meeting_id,
                             const Session& session);

// HTTP front end for QuestionnaireService.
class ApiServer {
 public:
  explicit ApiServer(std::shared_ptr<QuestionnaireService> service);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds and serves on a background thread; port 0 picks a free port.
  // Returns the bound port.
  int Start(const std::string& host, int port);
  // Binds and serves on the calling thread until Stop().
  void Run(const std::string& host, int port);
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace preme
