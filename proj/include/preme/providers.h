#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "preme/error.h"
#include "preme/transcript.h"

namespace preme {

using Embedding = std::vector<double>;

// Maps texts to fixed-dimension vectors. Implementations must be safe to call
// from several threads at once.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<Embedding> Embed(const std::vector<std::string>& texts) = 0;
};

struct GenerationRequest {
  std::string prompt;
  double temperature = 0.0;
  int max_tokens = 128;
  // Not part of the wire request; lets offline providers vary their output
  // per trial the way a sampled remote model would.
  int trial = 0;
};

class GenerationProvider {
 public:
  virtual ~GenerationProvider() = default;
  virtual std::string Generate(const GenerationRequest& request) = 0;
};

class LocatorProvider {
 public:
  virtual ~LocatorProvider() = default;
  virtual std::vector<TurnRange> Locate(const std::string& question,
                                        const Transcript& transcript) = 0;
};

struct QaAnswer {
  std::string answer;
  double confidence = 0.0;
};

class QaProvider {
 public:
  virtual ~QaProvider() = default;
  virtual QaAnswer Answer(const std::string& question,
                          const std::string& context) = 0;
};

class PosProvider {
 public:
  virtual ~PosProvider() = default;
  virtual std::vector<std::string> Tag(const std::vector<std::string>& tokens) = 0;
};

struct RetryPolicy {
  int retries = 2;
  std::chrono::milliseconds backoff{200};  // doubled after every failure
};

// Runs `call`, retrying on ProviderUnavailable. After the last failure the
// error is rethrown with the attempt count in its message.
template <typename Fn>
auto CallWithRetries(const RetryPolicy& policy, Fn&& call) -> decltype(call()) {
  auto delay = policy.backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      return call();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kProviderUnavailable) throw;
      if (attempt >= policy.retries) {
        throw Error(ErrorCode::kProviderUnavailable,
                    "giving up after " + std::to_string(attempt + 1) +
                        " attempts (" + std::to_string(policy.retries) +
                        " retries): " + e.what());
      }
    }
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

}  // namespace preme
