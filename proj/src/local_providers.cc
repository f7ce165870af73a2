#include "preme/local_providers.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "preme/text.h"

namespace preme {

uint64_t Fnv1a(std::string_view bytes, uint64_t seed) {
  uint64_t h = seed;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

std::string Stem(std::string token) {
  if (token.size() > 3 && token.back() == 's' && token[token.size() - 2] != 's') {
    token.pop_back();
  }
  return token;
}

}  // namespace

Embedding HashEmbeddingProvider::EmbedOne(std::string_view text) const {
  Embedding v(static_cast<size_t>(dimension_), 0.0);
  for (const auto& tok : ContentTokens(text)) {
    v[Fnv1a(Stem(tok)) % static_cast<uint64_t>(dimension_)] += 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

std::vector<Embedding> HashEmbeddingProvider::Embed(
    const std::vector<std::string>& texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(EmbedOne(t));
  return out;
}

namespace {

constexpr std::string_view kExcerptStart = "meeting excerpt:\n";
constexpr std::string_view kExcerptEnd = "\nQuestions:";

bool IsFiller(std::string_view w) {
  static const char* const kFiller[] = {
      "um",    "uh",    "okay",  "well",   "like",   "think", "know",
      "right", "mean",  "gonna", "thing",  "things", "really", "actually",
      "maybe", "also",  "sure",  "good",   "great",  "something", "going",
      "want",  "need",  "let",   "get",    "got",    "one",   "lot",
      "kind",  "sort",  "much",  "many",   "bit",    "still", "yes",
      "hmm",   "mm",    "said",  "say",    "see",    "look",  "make",
      "way",   "quite", "even",  "first",  "next",   "last",  "agree",
      "point", "should", "could", "would", "might",  "must",  "shall",
      "don't", "it's",  "that's", "i'm",   "we're",  "they're", "let's"};
  for (const char* f : kFiller) {
    if (w == f) return true;
  }
  return false;
}

bool IsAlphaWord(std::string_view w) {
  if (w.size() < 3) return false;
  return std::all_of(w.begin(), w.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || c == '-';
  });
}

struct Phrase {
  std::string text;
  int count = 0;
};

std::vector<Phrase> CandidatePhrases(std::string_view excerpt) {
  const auto tokens = Tokenize(excerpt);
  std::vector<std::string> lower;
  std::vector<bool> content;
  for (const auto& t : tokens) {
    lower.push_back(CaseFold(t));
    const auto& w = lower.back();
    content.push_back(IsAlphaWord(w) && !IsStopword(w) && !IsFiller(w));
  }
  std::map<std::string, int> counts;
  for (size_t i = 0; i < lower.size(); ++i) {
    if (!content[i]) continue;
    counts[lower[i]] += 1;
    if (i + 1 < lower.size() && content[i + 1]) {
      // Bigrams weigh double so recurring compounds outrank their parts.
      counts[lower[i] + " " + lower[i + 1]] += 2;
    }
  }
  std::vector<Phrase> phrases;
  for (auto& [text, count] : counts) {
    if (count >= 2) phrases.push_back(Phrase{text, count});
  }
  std::stable_sort(phrases.begin(), phrases.end(),
                   [](const Phrase& a, const Phrase& b) { return a.count > b.count; });
  if (phrases.size() > 12) phrases.resize(12);
  return phrases;
}

constexpr const char* kTemplates[] = {
    "What is the {a} of the {s}?",
    "What did the team decide about the {a} of the {s}?",
    "How will the {a} be incorporated into the {s}?",
    "What are the main concerns about the {a} of the {s}?",
    "Why is the {a} important for the {s}?",
    "What was said about the {s}?",
    "Who raised the issue of {a} for the {s}?",
};

std::string Fill(std::string tmpl, const std::string& subject,
                 const std::string& aspect) {
  auto replace = [&](std::string_view key, const std::string& value) {
    for (size_t p = tmpl.find(key); p != std::string::npos; p = tmpl.find(key)) {
      tmpl.replace(p, key.size(), value);
    }
  };
  replace("{s}", subject);
  replace("{a}", aspect);
  return tmpl;
}

}  // namespace

std::string MockGenerationProvider::Generate(const GenerationRequest& request) {
  std::string_view excerpt = request.prompt;
  if (auto b = excerpt.find(kExcerptStart); b != std::string_view::npos) {
    excerpt.remove_prefix(b + kExcerptStart.size());
    if (auto e = excerpt.rfind(kExcerptEnd); e != std::string_view::npos) {
      excerpt = excerpt.substr(0, e);
    }
  }
  const auto phrases = CandidatePhrases(excerpt);
  if (phrases.size() < 2) return "I could not find anything to ask about.";

  const long temp_key = std::lround(request.temperature * 100.0);
  uint64_t seed = Fnv1a(excerpt);
  if (seed_ != 0) seed = Fnv1a(std::to_string(seed_), seed);
  seed = Fnv1a(std::to_string(temp_key), seed);
  if (temp_key > 0) seed = Fnv1a(std::to_string(request.trial), seed);
  std::mt19937_64 rng(seed);

  // Higher temperature samples from a wider slice of the phrase ranking.
  const size_t n = phrases.size();
  const size_t width = std::clamp<size_t>(
      2 + static_cast<size_t>(std::lround(request.temperature * double(n - 2))),
      2, n);
  const int count = 3 + static_cast<int>(rng() % 3);
  const size_t num_templates = std::size(kTemplates);

  std::string out = "Here are some questions about the excerpt:\n";
  for (int q = 0; q < count; ++q) {
    const size_t si = temp_key == 0 ? 0 : rng() % width;
    size_t ai = temp_key == 0 ? static_cast<size_t>(q + 1) % width : rng() % width;
    if (ai == si) ai = (ai + 1) % width;
    const size_t ti = temp_key == 0 ? static_cast<size_t>(q) % num_templates
                                    : rng() % num_templates;
    out += std::to_string(q + 1) + ". " +
           Fill(kTemplates[ti], phrases[si].text, phrases[ai].text) + "\n";
  }
  return out;
}

}  // namespace preme
