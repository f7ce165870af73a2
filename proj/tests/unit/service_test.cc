#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "preme/service.h"
#include "support.h"

using namespace preme;
using nlohmann::json;

namespace {

const std::filesystem::path kDir = std::filesystem::path(PREME_TEST_FIXTURE_DIR) / "api";

std::string Create(QuestionnaireService& s) {
  const auto r = s.Handle("POST", "/api/sessions", R"({"meeting_id": "school_board"})");
  REQUIRE(r.status == 201);
  return r.body["session_id"].get<std::string>();
}

}  // namespace

TEST_CASE("meeting endpoints") {
  QuestionnaireService s(kDir);
  const auto list = s.Handle("GET", "/api/meetings", "");
  CHECK(list.status == 200);
  CHECK(list.body["meetings"] == json::array({"school_board"}));
  CHECK(s.Handle("GET", "/api/meetings/school_board/questionnaire", "").body["entries"].size() == 2);
  CHECK(s.Handle("GET", "/api/meetings/school_board/transcript", "").body["meeting_transcripts"].size() == 10);
  CHECK(s.Handle("GET", "/api/meetings/school_board/reports", "").status == 200);
  const auto missing = s.Handle("GET", "/api/meetings/nope/questionnaire", "");
  CHECK(missing.status == 404);
  CHECK(missing.body["error"] == "NotFound");
  CHECK(s.Handle("GET", "/api/meetings/../../etc/questionnaire", "").status == 404);
  CHECK(s.Handle("DELETE", "/api/meetings", "").status == 404);
}

TEST_CASE("session endpoints") {
  QuestionnaireService s(kDir);
  const auto created = s.Handle("POST", "/api/sessions", R"({"meeting_id": "school_board"})");
  CHECK(created.status == 201);
  CHECK(created.body["state"] == "AwaitSubject");
  CHECK(created.body["subjects"] == json::array({"Education", "Budget"}));
  const std::string id = created.body["session_id"];

  const std::string base = "/api/sessions/" + id;
  auto r = s.Handle("POST", base + "/select", R"({"subject": "Budget"})");
  CHECK(r.status == 200);
  CHECK(r.body["state"] == "AwaitAspect");
  CHECK(r.body["aspects"].size() == 2);

  r = s.Handle("POST", base + "/select", R"({"aspect": "weather"})");
  CHECK(r.status == 422);
  CHECK(r.body["error"] == "UnknownAspect");
  CHECK(s.Handle("GET", base, "").body["state"] == "AwaitAspect");

  r = s.Handle("POST", base + "/show", "");
  CHECK(r.body["state"] == "ShowQuestions");
  CHECK(r.body["questions"][0]["id"] == "seg-02-q0001");
  r = s.Handle("POST", base + "/select", R"({"question": "seg-02-q0002"})");
  CHECK(r.body["state"] == "ShowAnswer");
  CHECK(r.body["question"]["answer_span"] == json::array({7, 10}));

  CHECK(s.Handle("POST", base + "/select", R"({"subject": "Budget"})").status == 409);
  CHECK(s.Handle("POST", base + "/select", R"({"subject": "a", "aspect": "b"})").status == 422);
  CHECK(s.Handle("POST", base + "/select", "not json").status == 422);
  CHECK(s.Handle("POST", "/api/sessions/s999999/back", "").status == 404);
  CHECK(s.Handle("POST", "/api/sessions", R"({"meeting_id": "nope"})").status == 404);
  CHECK(s.Handle("POST", "/api/sessions", R"({})").status == 422);

  for (int i = 0; i < 3; ++i) CHECK(s.Handle("POST", base + "/back", "").status == 200);
  r = s.Handle("POST", base + "/back", "");
  CHECK(r.status == 409);
  CHECK(r.body["error"] == "IllegalTransition");
}

TEST_CASE("concurrent sessions do not interfere") {
  QuestionnaireService s(kDir);
  std::vector<std::string> ids;
  for (int i = 0; i < 8; ++i) ids.push_back(Create(s));
  std::vector<std::jthread> threads;
  std::atomic<int> ok{0};
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] {
      const std::string base = "/api/sessions/" + ids[static_cast<size_t>(i)];
      const std::string subject = i % 2 == 0 ? "Education" : "Budget";
      for (int rep = 0; rep < 50; ++rep) {
        bool good = s.Handle("POST", base + "/select", json{{"subject", subject}}.dump()).status == 200;
        good = good && s.Handle("POST", base + "/show", "").status == 200;
        good = good && s.Handle("POST", base + "/back", "").status == 200;
        good = good && s.Handle("POST", base + "/back", "").status == 200;
        if (good) ++ok;
      }
    });
  }
  threads.clear();
  CHECK(ok == 400);
}

TEST_CASE("http server round trip") {
  auto service = std::make_shared<QuestionnaireService>(kDir);
  ApiServer server(service);
  const int port = server.Start("127.0.0.1", 0);
  REQUIRE(port > 0);
  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/api/meetings");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
  res = client.Post("/api/sessions", R"({"meeting_id": "school_board"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  const std::string id = json::parse(res->body)["session_id"];
  res = client.Post("/api/sessions/" + id + "/select", R"({"subject": "Nope"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 422);
  CHECK(json::parse(res->body)["error"] == "UnknownSubject");
  res = client.Get("/api/unknown");
  REQUIRE(res);
  CHECK(res->status == 404);
  server.Stop();
}
