#include "preme/http_providers.h"

#include <cmath>
#include <cstdlib>
#include <regex>

#include "httplib.h"
#include "preme/error.h"

namespace preme {

using nlohmann::json;

namespace {

struct ParsedUrl {
  std::string host_port;
  std::string path;
};

ParsedUrl ParseUrl(const std::string& url) {
  static const std::regex re(R"(^(http://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw Error(ErrorCode::kConfiguration, "unsupported provider url '" + url + "'");
  }
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

template <typename T>
T Field(const json& j, const char* key, const std::string& url) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput,
                url + ": bad or missing '" + key + "' in response: " + e.what());
  }
}

}  // namespace

json PostJson(const HttpEndpoint& endpoint, const json& body) {
  const ParsedUrl url = ParseUrl(endpoint.url);
  httplib::Client client(url.host_port);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    if (const char* key = std::getenv(endpoint.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kProviderUnavailable,
                endpoint.url + ": " + httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw Error(ErrorCode::kProviderUnavailable,
                endpoint.url + ": status " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::kMalformedInput,
                endpoint.url + ": status " + std::to_string(res->status) + ": " + res->body);
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedInput, endpoint.url + ": " + e.what());
  }
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {
  ParseUrl(endpoint_.url);
}

std::vector<Embedding> HttpEmbeddingProvider::Embed(const std::vector<std::string>& texts) {
  const json res = PostJson(endpoint_, json{{"texts", texts}});
  return Field<std::vector<Embedding>>(res, "vectors", endpoint_.url);
}

HttpGenerationProvider::HttpGenerationProvider(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {
  ParseUrl(endpoint_.url);
}

std::string HttpGenerationProvider::Generate(const GenerationRequest& request) {
  const json res = PostJson(endpoint_, json{{"prompt", request.prompt},
                                            {"temperature", request.temperature},
                                            {"max_tokens", request.max_tokens}});
  return Field<std::string>(res, "text", endpoint_.url);
}

HttpLocatorProvider::HttpLocatorProvider(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {
  ParseUrl(endpoint_.url);
}

std::vector<TurnRange> HttpLocatorProvider::Locate(const std::string& question,
                                                   const Transcript& transcript) {
  std::vector<std::string> turns;
  for (const auto& t : transcript.turns) turns.push_back(t.text);
  const json res = PostJson(endpoint_, json{{"question", question}, {"turns", turns}});
  const auto raw = Field<std::vector<std::vector<int>>>(res, "ranges", endpoint_.url);
  std::vector<TurnRange> out;
  for (const auto& r : raw) {
    if (r.size() != 2) {
      throw Error(ErrorCode::kMalformedInput, endpoint_.url + ": range must be [start, end]");
    }
    out.push_back(TurnRange{r[0], r[1]});
  }
  return out;
}

HttpQaProvider::HttpQaProvider(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  ParseUrl(endpoint_.url);
}

QaAnswer HttpQaProvider::Answer(const std::string& question, const std::string& context) {
  const json res = PostJson(endpoint_, json{{"question", question}, {"context", context}});
  QaAnswer a{Field<std::string>(res, "answer", endpoint_.url),
             Field<double>(res, "confidence", endpoint_.url)};
  if (!std::isfinite(a.confidence) || a.confidence < 0.0 || a.confidence > 1.0) {
    throw Error(ErrorCode::kMalformedInput, endpoint_.url + ": confidence outside [0,1]");
  }
  return a;
}

HttpPosProvider::HttpPosProvider(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  ParseUrl(endpoint_.url);
}

std::vector<std::string> HttpPosProvider::Tag(const std::vector<std::string>& tokens) {
  const json res = PostJson(endpoint_, json{{"tokens", tokens}});
  auto tags = Field<std::vector<std::string>>(res, "tags", endpoint_.url);
  if (tags.size() != tokens.size()) {
    throw Error(ErrorCode::kMalformedInput,
                endpoint_.url + ": expected " + std::to_string(tokens.size()) + " tags");
  }
  return tags;
}

}  // namespace preme
