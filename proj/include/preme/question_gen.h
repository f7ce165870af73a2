#pragma once

#include <string>
#include <vector>

#include "preme/providers.h"
#include "preme/segmentation.h"
#include "preme/transcript.h"

namespace preme {

// 0.00, 0.05, ..., 1.00 (21 values), each computed as i / 20 so the grid is
// exact to the last bit.
std::vector<double> DefaultTemperatureGrid();

inline constexpr const char* kDefaultPromptTemplate =
    "Generate questions about the following meeting excerpt:\n{window}\n"
    "Questions:";

struct GenerationConfig {
  std::vector<double> temperatures = DefaultTemperatureGrid();
  int trials_per_temperature = 10;
  int max_output_tokens = 128;
  int context_window_tokens = 2048;
  int stride_tokens = 1024;
  int min_question_tokens = 4;
  int max_question_tokens = 60;
  std::string prompt_template = kDefaultPromptTemplate;
  int parallelism = 1;  // concurrent provider calls
  RetryPolicy retry;

  void Validate() const;
};

struct TokenRange {
  int begin = 0;
  int end = 0;
  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

struct PromptWindow {
  std::string segment_id;
  TokenRange tokens;
  std::string text;
};

// Window arithmetic alone: none when n is 0, one window when n <= window,
// otherwise windows starting at 0, stride, 2*stride, ... clipped to n,
// stopping at the first one that reaches n.
std::vector<TokenRange> WindowRanges(int n, int window, int stride);

std::vector<PromptWindow> WindowSegment(const std::string& segment_id,
                                        const std::vector<std::string>& tokens,
                                        const GenerationConfig& config);

// Turn texts of the segment, one per line, speakers omitted.
std::string SegmentText(const Transcript& transcript, const Segment& segment);

std::string RenderPrompt(const std::string& prompt_template,
                         const std::string& window_text);

// Splits raw model output into lines, strips enumeration prefixes ("1.",
// "2)", "-", "*", "Q3:") and keeps lines ending in '?'.
std::vector<std::string> ParseGeneratedQuestions(const std::string& raw);

// One provider call. Throws EmptyGeneration when nothing survives parsing.
std::vector<std::string> GenerateForWindow(GenerationProvider& provider,
                                           const PromptWindow& window,
                                           double temperature, int max_tokens,
                                           int trial,
                                           const std::string& prompt_template);

// Casefold + whitespace collapse; the pool's identity key.
std::string NormalizeQuestion(const std::string& question);

struct CallRecord {
  double temperature = 0.0;
  int trial = 0;
  int window = 0;

  friend bool operator==(const CallRecord&, const CallRecord&) = default;
};

struct PooledQuestion {
  std::string id;
  std::string text;
  std::vector<CallRecord> provenance;
};

struct QuestionPool {
  std::string segment_id;
  std::vector<PooledQuestion> questions;
  int calls_total = 0;
  int calls_failed = 0;
  int calls_empty = 0;
  std::vector<std::string> warnings;
};

std::string QuestionId(const std::string& segment_id, int index);

// Runs every (window, temperature, trial) call and unions the parsed
// questions. `call_order`, when given, is a permutation of the canonical call
// indices (window-major, then temperature, then trial) used as the dispatch
// order; the pool does not depend on it. Throws ProviderUnavailable only if
// every call fails.
QuestionPool BuildPool(const std::string& segment_id, const std::string& text,
                       GenerationProvider& provider,
                       const GenerationConfig& config,
                       const std::vector<int>& call_order = {});

}  // namespace preme
