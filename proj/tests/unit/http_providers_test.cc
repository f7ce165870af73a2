#include <cstdlib>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "preme/http_providers.h"
#include "support.h"

using namespace preme;
using nlohmann::json;

namespace {

class StubServer {
 public:
  explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post(".*", [handler](const httplib::Request& req, httplib::Response& res) { handler(req, res); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  HttpEndpoint Endpoint(const std::string& path = "/v1") const {
    HttpEndpoint e;
    e.url = "http://127.0.0.1:" + std::to_string(port_) + path;
    e.timeout = std::chrono::milliseconds(2000);
    return e;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

void Reply(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kNotFound;
}

}  // namespace

TEST_CASE("embedding provider wire format and auth") {
  std::string auth;
  json seen;
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    seen = json::parse(req.body);
    Reply(res, {{"vectors", json::array({json::array({1.0, 0.0}), json::array({0.5, 0.5})})}});
  });
  ::setenv("PREME_TEST_KEY", "secret", 1);
  HttpEndpoint e = server.Endpoint("/embed");
  e.api_key_env = "PREME_TEST_KEY";
  HttpEmbeddingProvider p(e);
  const auto v = p.Embed({"a", "b"});
  CHECK(seen["texts"] == json::array({"a", "b"}));
  CHECK(auth == "Bearer secret");
  REQUIRE(v.size() == 2);
  CHECK(v[1] == Embedding{0.5, 0.5});
}

TEST_CASE("status codes map to error codes") {
  int status = 503;
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    Reply(res, {{"error", "x"}}, status);
  });
  HttpGenerationProvider p(server.Endpoint());
  const GenerationRequest r{"prompt", 0.5, 16, 0};
  CHECK(CodeOf([&] { p.Generate(r); }) == ErrorCode::kProviderUnavailable);
  status = 429;
  CHECK(CodeOf([&] { p.Generate(r); }) == ErrorCode::kProviderUnavailable);
  status = 400;
  CHECK(CodeOf([&] { p.Generate(r); }) == ErrorCode::kMalformedInput);
  HttpEndpoint dead;
  dead.url = "http://127.0.0.1:1/x";
  dead.timeout = std::chrono::milliseconds(500);
  HttpGenerationProvider down(dead);
  CHECK(CodeOf([&] { down.Generate(r); }) == ErrorCode::kProviderUnavailable);
  HttpEndpoint tls;
  tls.url = "https://example.com/x";
  CHECK(CodeOf([&] { PostJson(tls, json::object()); }) == ErrorCode::kConfiguration);
}

TEST_CASE("generation, locator, qa and pos providers") {
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    if (req.path == "/gen") {
      CHECK(body["temperature"] == 0.25);
      CHECK(body["max_tokens"] == 32);
      Reply(res, {{"text", "1. Why?"}});
    } else if (req.path == "/locate") {
      CHECK(body["turns"].size() == 2);
      Reply(res, {{"ranges", json::array({json::array({0, 2})})}});
    } else if (req.path == "/qa") {
      Reply(res, {{"answer", "yes"}, {"confidence", body["question"] == "bad?" ? 1.5 : 0.75}});
    } else if (req.path == "/pos") {
      const size_t n = body["tokens"].size();
      Reply(res, {{"tags", json(std::vector<std::string>(n == 3 ? 2 : n, "NN"))}});
    } else {
      res.set_content("not json", "text/plain");
    }
  });
  CHECK(HttpGenerationProvider(server.Endpoint("/gen")).Generate({"p", 0.25, 32, 0}) == "1. Why?");
  const Transcript t = testing::MakeTranscript({"a", "b"});
  CHECK(HttpLocatorProvider(server.Endpoint("/locate")).Locate("q?", t) == std::vector<TurnRange>{{0, 2}});
  HttpQaProvider qa(server.Endpoint("/qa"));
  CHECK(qa.Answer("ok?", "ctx").confidence == 0.75);
  CHECK(CodeOf([&] { qa.Answer("bad?", "ctx"); }) == ErrorCode::kMalformedInput);
  HttpPosProvider pos(server.Endpoint("/pos"));
  CHECK(pos.Tag({"a", "b"}).size() == 2);
  CHECK(CodeOf([&] { pos.Tag({"a", "b", "c"}); }) == ErrorCode::kMalformedInput);
  CHECK(CodeOf([&] { PostJson(server.Endpoint("/other"), json::object()); }) == ErrorCode::kMalformedInput);
}
