#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "preme/error.h"
#include "preme/providers.h"
#include "preme/transcript.h"

namespace preme::testing {

inline Transcript MakeTranscript(const std::vector<std::string>& texts,
                                 const std::string& meeting_id = "m1") {
  Transcript t;
  t.meeting_id = meeting_id;
  for (size_t i = 0; i < texts.size(); ++i) {
    t.turns.push_back(Turn{static_cast<int>(i), "Speaker " + std::to_string(i % 3), texts[i]});
  }
  return t;
}

// Returns fixed vectors for known texts; unknown texts are an error.
class TableEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit TableEmbeddingProvider(std::map<std::string, Embedding> table)
      : table_(std::move(table)) {}
  std::vector<Embedding> Embed(const std::vector<std::string>& texts) override {
    std::vector<Embedding> out;
    for (const auto& t : texts) {
      auto it = table_.find(t);
      if (it == table_.end()) throw Error(ErrorCode::kMalformedInput, "no vector for '" + t + "'");
      out.push_back(it->second);
    }
    calls += 1;
    return out;
  }
  int calls = 0;

 private:
  std::map<std::string, Embedding> table_;
};

// Turn texts are "u<index>"; returns vectors[index].
class IndexedEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit IndexedEmbeddingProvider(std::vector<Embedding> vectors)
      : vectors_(std::move(vectors)) {}
  std::vector<Embedding> Embed(const std::vector<std::string>& texts) override {
    std::vector<Embedding> out;
    for (const auto& t : texts) out.push_back(vectors_.at(std::stoul(t.substr(1))));
    return out;
  }
  static std::vector<std::string> Texts(size_t n) {
    std::vector<std::string> out;
    for (size_t i = 0; i < n; ++i) out.push_back("u" + std::to_string(i));
    return out;
  }

 private:
  std::vector<Embedding> vectors_;
};

class FailingEmbeddingProvider : public EmbeddingProvider {
 public:
  std::vector<Embedding> Embed(const std::vector<std::string>&) override {
    calls += 1;
    throw Error(ErrorCode::kProviderUnavailable, "timeout");
  }
  std::atomic<int> calls{0};
};

template <typename Base>
class Counting : public Base {
 public:
  using Base::Base;
  std::atomic<int> embed_calls{0};
  std::vector<Embedding> Embed(const std::vector<std::string>& texts) override {
    embed_calls += 1;
    return Base::Embed(texts);
  }
};

class StubLocator : public LocatorProvider {
 public:
  std::map<std::string, std::vector<TurnRange>> ranges;
  std::set<std::string> failing;
  std::vector<TurnRange> Locate(const std::string& question, const Transcript&) override {
    if (failing.count(question) > 0) throw Error(ErrorCode::kProviderUnavailable, "locator down");
    auto it = ranges.find(question);
    return it == ranges.end() ? std::vector<TurnRange>{} : it->second;
  }
};

class ConstQa : public QaProvider {
 public:
  explicit ConstQa(double c) : c_(c) {}
  QaAnswer Answer(const std::string&, const std::string&) override { return {"", c_}; }

 private:
  double c_;
};

class TableQa : public QaProvider {
 public:
  std::map<std::string, double> confidence;
  QaAnswer Answer(const std::string& q, const std::string&) override {
    return {"", confidence.at(q)};
  }
};

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("preme-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path DataDir() { return PREME_TEST_DATA_DIR; }

}  // namespace preme::testing
