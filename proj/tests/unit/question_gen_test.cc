#include <algorithm>
#include <mutex>
#include <random>
#include <set>

#include "doctest.h"
#include "preme/local_providers.h"
#include "preme/question_gen.h"
#include "preme/text.h"
#include "support.h"

using namespace preme;
using namespace preme::testing;

namespace {

class FixedGeneration : public GenerationProvider {
 public:
  explicit FixedGeneration(std::string text) : text_(std::move(text)) {}
  std::string Generate(const GenerationRequest&) override { return text_; }

 private:
  std::string text_;
};

// Answers by window: prompts containing "alpha" get {A, B}, others {C}.
class ByWindow : public GenerationProvider {
 public:
  std::string Generate(const GenerationRequest& r) override {
    if (r.prompt.find("alpha") != std::string::npos) return "1. Question A?\n2. Question B?";
    return "- Question C?";
  }
};

class Recording : public GenerationProvider {
 public:
  std::string Generate(const GenerationRequest& r) override {
    std::lock_guard lock(mu);
    temperatures.push_back(r.temperature);
    return "What is it?";
  }
  std::mutex mu;
  std::vector<double> temperatures;
};

class FailSome : public GenerationProvider {
 public:
  std::string Generate(const GenerationRequest& r) override {
    if (r.trial % 2 == 1) throw Error(ErrorCode::kProviderUnavailable, "busy");
    if (r.temperature > 0.5) return "nothing useful here.";
    return "What about the budget?";
  }
};

GenerationConfig Quick() {
  GenerationConfig c;
  c.retry.retries = 0;
  c.retry.backoff = std::chrono::milliseconds(0);
  return c;
}

std::vector<std::string> Texts(const QuestionPool& pool) {
  std::vector<std::string> out;
  for (const auto& q : pool.questions) out.push_back(q.text);
  return out;
}

}  // namespace

TEST_CASE("temperature grid") {
  const auto grid = DefaultTemperatureGrid();
  REQUIRE(grid.size() == 21);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 1.0);
  for (size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] - grid[i - 1] == doctest::Approx(0.05));
}

TEST_CASE("window arithmetic") {
  CHECK(WindowRanges(1500, 2048, 1024) == std::vector<TokenRange>{{0, 1500}});
  CHECK(WindowRanges(2048, 2048, 1024) == std::vector<TokenRange>{{0, 2048}});
  CHECK(WindowRanges(3000, 2048, 1024) == std::vector<TokenRange>{{0, 2048}, {1024, 3000}});
  CHECK(WindowRanges(2049, 2048, 1024) == std::vector<TokenRange>{{0, 2048}, {1024, 2049}});
  CHECK(WindowRanges(0, 2048, 1024).empty());
}

TEST_CASE("window segment joins tokens") {
  std::vector<std::string> tokens;
  for (int i = 0; i < 5; ++i) tokens.push_back("w" + std::to_string(i));
  GenerationConfig c;
  c.context_window_tokens = 3;
  c.stride_tokens = 2;
  const auto windows = WindowSegment("seg-01", tokens, c);
  REQUIRE(windows.size() == 2);
  CHECK(windows[0].text == "w0 w1 w2");
  CHECK(windows[1].tokens == TokenRange{2, 5});
  CHECK(windows[1].segment_id == "seg-01");
}

TEST_CASE("parse generated questions") {
  using V = std::vector<std::string>;
  CHECK(ParseGeneratedQuestions("1. What is the budget?\n2. Who attended?") ==
        V{"What is the budget?", "Who attended?"});
  CHECK(ParseGeneratedQuestions("- Why?\n* How so?\nQ3: When is it due?\n4) Where?\nno") ==
        V{"Why?", "How so?", "When is it due?", "Where?"});
  FixedGeneration none("The meeting was long.");
  PromptWindow w{"seg-01", {0, 1}, "x"};
  try {
    GenerateForWindow(none, w, 0.0, 64, 0, kDefaultPromptTemplate);
    FAIL("expected EmptyGeneration");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyGeneration);
  }
}

TEST_CASE("prompt rendering") {
  CHECK(RenderPrompt("A {window} B", "text") == "A text B");
}

TEST_CASE("pool dedups identical outputs with full provenance") {
  FixedGeneration gen("1. What is the cost?\n2. Who decides the price?\n3. When is the launch?");
  const QuestionPool pool = BuildPool("seg-01", "short excerpt", gen, Quick());
  REQUIRE(pool.questions.size() == 3);
  for (const auto& q : pool.questions) CHECK(q.provenance.size() == 210);
  CHECK(pool.calls_total == 210);
  CHECK(pool.questions[0].id == QuestionId("seg-01", 0));
}

TEST_CASE("pool is the union over windows") {
  ByWindow gen;
  GenerationConfig c = Quick();
  c.context_window_tokens = 2;
  c.stride_tokens = 2;
  c.min_question_tokens = 1;
  c.temperatures = {0.0};
  c.trials_per_temperature = 1;
  const QuestionPool pool = BuildPool("seg-01", "alpha one beta two", gen, c);
  auto texts = Texts(pool);
  std::sort(texts.begin(), texts.end());
  CHECK(texts == std::vector<std::string>{"Question A?", "Question B?", "Question C?"});
}

TEST_CASE("casefold duplicates collapse") {
  FixedGeneration gen("What is X really?\nwhat  is x really?");
  GenerationConfig c = Quick();
  c.temperatures = {0.0};
  c.trials_per_temperature = 1;
  const QuestionPool pool = BuildPool("seg-01", "x", gen, c);
  REQUIRE(pool.questions.size() == 1);
  CHECK(pool.questions[0].text == "What is X really?");
  CHECK(NormalizeQuestion(" What  is X? ") == "what is x?");
}

TEST_CASE("length filter") {
  FixedGeneration gen("Why?\nWhat is the plan for the launch?");
  GenerationConfig c = Quick();
  c.temperatures = {0.0};
  c.trials_per_temperature = 1;
  const QuestionPool pool = BuildPool("seg-01", "x", gen, c);
  CHECK(Texts(pool) == std::vector<std::string>{"What is the plan for the launch?"});
}

TEST_CASE("every grid temperature is requested") {
  Recording gen;
  GenerationConfig c = Quick();
  c.trials_per_temperature = 2;
  c.parallelism = 3;
  BuildPool("seg-01", "x", gen, c);
  std::multiset<double> got(gen.temperatures.begin(), gen.temperatures.end());
  for (double t : DefaultTemperatureGrid()) CHECK(got.count(t) == 2);
}

TEST_CASE("failed and empty calls are counted") {
  FailSome gen;
  GenerationConfig c = Quick();
  c.trials_per_temperature = 2;
  const QuestionPool pool = BuildPool("seg-01", "x", gen, c);
  CHECK(pool.calls_total == 42);
  CHECK(pool.calls_failed == 21);
  CHECK(pool.calls_empty == 10);
  REQUIRE(pool.questions.size() == 1);
  CHECK(pool.questions[0].provenance.size() == 11);
}

TEST_CASE("all calls failing raises provider unavailable") {
  class Down : public GenerationProvider {
    std::string Generate(const GenerationRequest&) override {
      throw Error(ErrorCode::kProviderUnavailable, "down");
    }
  } gen;
  GenerationConfig c = Quick();
  c.temperatures = {0.0, 1.0};
  c.trials_per_temperature = 1;
  CHECK_THROWS_AS(BuildPool("seg-01", "x", gen, c), Error);
}

TEST_CASE("mock generation is deterministic and order independent") {
  MockGenerationProvider gen(3);
  const std::string text =
      "We need to settle the production cost of the remote control.\n"
      "The production cost should stay under twelve euros.\n"
      "The remote control buttons are too small.\n";
  GenerationConfig c = Quick();
  c.parallelism = 4;
  const QuestionPool base = BuildPool("seg-01", text, gen, c);
  CHECK_FALSE(base.questions.empty());
  std::vector<int> order(static_cast<size_t>(base.calls_total));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937 rng(1);
  for (int rep = 0; rep < 3; ++rep) {
    std::shuffle(order.begin(), order.end(), rng);
    const QuestionPool other = BuildPool("seg-01", text, gen, c, order);
    REQUIRE(other.questions.size() == base.questions.size());
    for (size_t i = 0; i < base.questions.size(); ++i) {
      CHECK(other.questions[i].id == base.questions[i].id);
      CHECK(other.questions[i].text == base.questions[i].text);
      CHECK(other.questions[i].provenance == base.questions[i].provenance);
    }
  }
  GenerationRequest r{RenderPrompt(kDefaultPromptTemplate, text), 0.0, 128, 0};
  GenerationRequest r2 = r;
  r2.trial = 5;
  CHECK(gen.Generate(r) == gen.Generate(r2));
}
