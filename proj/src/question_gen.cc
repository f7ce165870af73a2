#include "preme/question_gen.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <thread>

#include <spdlog/spdlog.h>

#include "preme/text.h"

namespace preme {

std::vector<double> DefaultTemperatureGrid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(static_cast<double>(i) / 20.0);
  return grid;
}

void GenerationConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kConfiguration, what);
  };
  if (temperatures.empty()) fail("temperature grid is empty");
  for (double t : temperatures) {
    if (!(t >= 0.0 && t <= 1.0)) fail("temperatures must lie in [0, 1]");
  }
  if (trials_per_temperature < 1 || max_output_tokens < 1 ||
      context_window_tokens < 1 || stride_tokens < 1 || parallelism < 1) {
    fail("generation counts must be >= 1");
  }
  if (stride_tokens > context_window_tokens) {
    fail("stride_tokens must not exceed context_window_tokens");
  }
  if (min_question_tokens > max_question_tokens) {
    fail("min_question_tokens exceeds max_question_tokens");
  }
  if (prompt_template.find("{window}") == std::string::npos) {
    fail("prompt_template lacks a {window} placeholder");
  }
}

std::vector<TokenRange> WindowRanges(int n, int window, int stride) {
  std::vector<TokenRange> out;
  if (n <= 0) return out;
  if (n <= window) {
    out.push_back(TokenRange{0, n});
    return out;
  }
  for (int start = 0;; start += stride) {
    const int end = std::min(n, start + window);
    out.push_back(TokenRange{start, end});
    if (end == n) break;
  }
  return out;
}

std::vector<PromptWindow> WindowSegment(const std::string& segment_id,
                                        const std::vector<std::string>& tokens,
                                        const GenerationConfig& config) {
  std::vector<PromptWindow> windows;
  for (const TokenRange& r :
       WindowRanges(static_cast<int>(tokens.size()), config.context_window_tokens,
                    config.stride_tokens)) {
    std::vector<std::string> slice(tokens.begin() + r.begin,
                                   tokens.begin() + r.end);
    windows.push_back(PromptWindow{segment_id, r, Detokenize(slice)});
  }
  return windows;
}

std::string SegmentText(const Transcript& transcript, const Segment& segment) {
  std::string out;
  for (int i = segment.turns.start; i < segment.turns.end; ++i) {
    if (!out.empty()) out += '\n';
    out += transcript.turns.at(static_cast<size_t>(i)).text;
  }
  return out;
}

std::string RenderPrompt(const std::string& prompt_template,
                         const std::string& window_text) {
  std::string out = prompt_template;
  const std::string key = "{window}";
  if (auto p = out.find(key); p != std::string::npos) {
    out.replace(p, key.size(), window_text);
  }
  return out;
}

std::vector<std::string> ParseGeneratedQuestions(const std::string& raw) {
  static const std::regex kPrefix(R"(^(\d+[.)]|[-*]|Q\d*[:.)])\s*)");
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= raw.size()) {
    size_t nl = raw.find('\n', pos);
    if (nl == std::string::npos) nl = raw.size();
    std::string line = Trim(std::string_view(raw).substr(pos, nl - pos));
    pos = nl + 1;
    line = Trim(std::regex_replace(line, kPrefix, "",
                                   std::regex_constants::format_first_only));
    if (!line.empty() && line.back() == '?') out.push_back(CollapseWhitespace(line));
    if (nl == raw.size()) break;
  }
  return out;
}

std::vector<std::string> GenerateForWindow(GenerationProvider& provider,
                                           const PromptWindow& window,
                                           double temperature, int max_tokens,
                                           int trial,
                                           const std::string& prompt_template) {
  GenerationRequest request{RenderPrompt(prompt_template, window.text),
                            temperature, max_tokens, trial};
  auto questions = ParseGeneratedQuestions(provider.Generate(request));
  if (questions.empty()) {
    throw Error(ErrorCode::kEmptyGeneration,
                "no questions parsed for " + window.segment_id);
  }
  return questions;
}

std::string NormalizeQuestion(const std::string& question) {
  return CaseFold(CollapseWhitespace(question));
}

std::string QuestionId(const std::string& segment_id, int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "-q%04d", index);
  return segment_id + buf;
}

namespace {

struct CallSlot {
  std::vector<std::string> questions;
  bool failed = false;
  bool empty = false;
  std::string error;
};

}  // namespace

QuestionPool BuildPool(const std::string& segment_id, const std::string& text,
                       GenerationProvider& provider,
                       const GenerationConfig& config,
                       const std::vector<int>& call_order) {
  config.Validate();
  const auto tokens = Tokenize(text);
  if (tokens.empty()) {
    throw Error(ErrorCode::kMalformedInput,
                "segment " + segment_id + " has no text");
  }
  const auto windows = WindowSegment(segment_id, tokens, config);
  const int num_temps = static_cast<int>(config.temperatures.size());
  const int trials = config.trials_per_temperature;
  const int total = static_cast<int>(windows.size()) * num_temps * trials;

  auto decode = [&](int call) {
    const int trial = call % trials;
    const int temp = (call / trials) % num_temps;
    const int window = call / (trials * num_temps);
    return CallRecord{config.temperatures[static_cast<size_t>(temp)], trial,
                      window};
  };

  std::vector<int> order = call_order;
  if (order.empty()) {
    order.resize(static_cast<size_t>(total));
    for (int i = 0; i < total; ++i) order[static_cast<size_t>(i)] = i;
  } else {
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < total; ++i) {
      if (static_cast<int>(sorted.size()) != total ||
          sorted[static_cast<size_t>(i)] != i) {
        throw Error(ErrorCode::kConfiguration,
                    "call_order is not a permutation of the call indices");
      }
    }
  }

  std::vector<CallSlot> slots(static_cast<size_t>(total));
  std::atomic<size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr fatal;
  auto worker = [&] {
    for (size_t k = next++; k < order.size(); k = next++) {
      const int call = order[k];
      const CallRecord rec = decode(call);
      CallSlot& slot = slots[static_cast<size_t>(call)];
      try {
        slot.questions = CallWithRetries(config.retry, [&] {
          return GenerateForWindow(provider, windows[static_cast<size_t>(rec.window)],
                                   rec.temperature, config.max_output_tokens,
                                   rec.trial, config.prompt_template);
        });
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kEmptyGeneration) {
          slot.empty = true;
        } else if (e.code() == ErrorCode::kProviderUnavailable) {
          slot.failed = true;
          slot.error = e.what();
        } else {
          std::lock_guard lock(error_mu);
          if (!fatal) fatal = std::current_exception();
          next = order.size();
        }
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!fatal) fatal = std::current_exception();
        next = order.size();
      }
    }
  };
  const int threads = std::min(config.parallelism, std::max(1, total));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  QuestionPool pool;
  pool.segment_id = segment_id;
  pool.calls_total = total;
  std::map<std::string, size_t> index;
  std::string last_error;
  for (int call = 0; call < total; ++call) {
    const CallSlot& slot = slots[static_cast<size_t>(call)];
    if (slot.failed) {
      ++pool.calls_failed;
      last_error = slot.error;
      continue;
    }
    if (slot.empty) {
      ++pool.calls_empty;
      continue;
    }
    const CallRecord rec = decode(call);
    for (const std::string& q : slot.questions) {
      const int n_tok = static_cast<int>(Tokenize(q).size());
      if (n_tok < config.min_question_tokens || n_tok > config.max_question_tokens) {
        continue;
      }
      const std::string key = NormalizeQuestion(q);
      auto [it, inserted] = index.emplace(key, pool.questions.size());
      if (inserted) {
        pool.questions.push_back(PooledQuestion{
            QuestionId(segment_id, static_cast<int>(pool.questions.size())), q, {}});
      }
      auto& prov = pool.questions[it->second].provenance;
      if (prov.empty() || !(prov.back() == rec)) prov.push_back(rec);
    }
  }
  if (total > 0 && pool.calls_failed == total) {
    throw Error(ErrorCode::kProviderUnavailable,
                "all " + std::to_string(total) + " generation calls failed for " +
                    segment_id + ": " + last_error);
  }
  if (pool.calls_failed > 0) {
    pool.warnings.push_back(std::to_string(pool.calls_failed) + " of " +
                            std::to_string(total) + " generation calls failed");
    spdlog::warn("{}: {}", segment_id, pool.warnings.back());
  }
  if (pool.calls_empty > 0) {
    pool.warnings.push_back(std::to_string(pool.calls_empty) +
                            " calls produced no questions");
    spdlog::debug("{}: {}", segment_id, pool.warnings.back());
  }
  return pool;
}

}  // namespace preme
