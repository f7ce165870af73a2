#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "json.hpp"
#include "preme/providers.h"

namespace preme {

struct HttpEndpoint {
  std::string url;           // http://host[:port]/path
  std::string api_key_env;   // sent as "Authorization: Bearer <value>" when set
  std::chrono::milliseconds timeout{30000};
};

// POSTs `body` as JSON and returns the parsed response. Connection failures,
// 429 and 5xx map to ProviderUnavailable; other non-2xx statuses and
// unparseable bodies to MalformedInput.
nlohmann::json PostJson(const HttpEndpoint& endpoint, const nlohmann::json& body);

// {"texts": [...]} -> {"vectors": [[...], ...]}
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEndpoint endpoint);
  std::vector<Embedding> Embed(const std::vector<std::string>& texts) override;

 private:
  HttpEndpoint endpoint_;
};

// {"prompt", "temperature", "max_tokens"} -> {"text"}
class HttpGenerationProvider : public GenerationProvider {
 public:
  explicit HttpGenerationProvider(HttpEndpoint endpoint);
  std::string Generate(const GenerationRequest& request) override;

 private:
  HttpEndpoint endpoint_;
};

// {"question", "turns": [...]} -> {"ranges": [[start, end], ...]}
class HttpLocatorProvider : public LocatorProvider {
 public:
  explicit HttpLocatorProvider(HttpEndpoint endpoint);
  std::vector<TurnRange> Locate(const std::string& question,
                                const Transcript& transcript) override;

 private:
  HttpEndpoint endpoint_;
};

// {"question", "context"} -> {"answer", "confidence"}
class HttpQaProvider : public QaProvider {
 public:
  explicit HttpQaProvider(HttpEndpoint endpoint);
  QaAnswer Answer(const std::string& question, const std::string& context) override;

 private:
  HttpEndpoint endpoint_;
};

// {"tokens": [...]} -> {"tags": [...]}
class HttpPosProvider : public PosProvider {
 public:
  explicit HttpPosProvider(HttpEndpoint endpoint);
  std::vector<std::string> Tag(const std::vector<std::string>& tokens) override;

 private:
  HttpEndpoint endpoint_;
};

}  // namespace preme
