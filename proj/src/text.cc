#include "preme/text.h"

#include <algorithm>
#include <array>
#include <cctype>

namespace preme {
namespace {

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool IsWordChar(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

bool IsDigit(char c) {
  return std::isdigit(static_cast<unsigned char>(c)) != 0;
}

void TokenizeChunk(std::string_view chunk, std::vector<std::string>& out) {
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      out.push_back(std::move(word));
      word.clear();
    }
  };
  const size_t n = chunk.size();
  for (size_t i = 0; i < n; ++i) {
    const char c = chunk[i];
    if (IsWordChar(c)) {
      word.push_back(c);
      continue;
    }
    const bool prev_word = i > 0 && IsWordChar(chunk[i - 1]);
    const bool next_word = i + 1 < n && IsWordChar(chunk[i + 1]);
    if (c == '\'' && i + 1 < n && (chunk[i + 1] == 's' || chunk[i + 1] == 'S') &&
        (i + 2 >= n || !IsWordChar(chunk[i + 2]))) {
      flush();
      out.emplace_back(chunk.substr(i, 2));
      ++i;
      continue;
    }
    if ((c == '\'' || c == '-') && prev_word && next_word && !word.empty()) {
      word.push_back(c);
      continue;
    }
    if ((c == '.' || c == ',') && i > 0 && IsDigit(chunk[i - 1]) &&
        i + 1 < n && IsDigit(chunk[i + 1]) && !word.empty()) {
      word.push_back(c);
      continue;
    }
    flush();
    out.emplace_back(1, c);
  }
  flush();
}

constexpr std::array<std::string_view, 127> kStopwords = {
    "a",        "about",   "above",  "after",   "again",  "against", "all",
    "am",       "an",      "and",    "any",     "are",    "as",      "at",
    "be",       "because", "been",   "before",  "being",  "below",   "between",
    "both",     "but",     "by",     "can",     "could",  "did",     "do",
    "does",     "doing",   "down",   "during",  "each",   "few",     "for",
    "from",     "further", "had",    "has",     "have",   "having",  "he",
    "her",      "here",    "hers",   "herself", "him",    "himself", "his",
    "how",      "i",       "if",     "in",      "into",   "is",      "it",
    "its",      "itself",  "just",   "me",      "more",   "most",    "my",
    "myself",   "no",      "nor",    "not",     "now",    "of",      "off",
    "on",       "once",    "only",   "or",      "other",  "our",     "ours",
    "ourselves", "out",    "over",   "own",     "same",   "she",     "should",
    "so",       "some",    "such",   "than",    "that",   "the",     "their",
    "theirs",   "them",    "themselves", "then", "there", "these",   "they",
    "this",     "those",   "through", "to",     "too",    "under",   "until",
    "up",       "very",    "was",    "we",      "were",   "what",    "when",
    "where",    "which",   "while",  "who",     "whom",   "why",     "will",
    "with",     "would",   "you",    "your",    "yours",  "yourself", "'s",
    "yeah",
};

}  // namespace

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSpace(text[i])) ++i;
    size_t j = i;
    while (j < text.size() && !IsSpace(text[j])) ++j;
    if (j > i) TokenizeChunk(text.substr(i, j - i), tokens);
    i = j;
  }
  return tokens;
}

std::string CaseFold(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string CollapseWhitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (IsSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string Trim(std::string_view text) {
  size_t b = 0;
  size_t e = text.size();
  while (b < e && IsSpace(text[b])) ++b;
  while (e > b && IsSpace(text[e - 1])) --e;
  return std::string(text.substr(b, e - b));
}

std::string Join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string Detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    const bool attach = t == "'s" || t == "'S" || t == "?" || t == "!" ||
                        t == "," || t == "." || t == ";" || t == ":";
    if (i > 0 && !attach) out.push_back(' ');
    out.append(t);
  }
  return out;
}

bool IsPunctuationToken(std::string_view token) {
  if (token.empty()) return false;
  return std::all_of(token.begin(), token.end(), [](char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
  });
}

bool IsStopword(std::string_view lowercase_token) {
  return std::find(kStopwords.begin(), kStopwords.end(), lowercase_token) !=
         kStopwords.end();
}

std::vector<std::string> MetricTokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& tok : Tokenize(text)) {
    if (IsPunctuationToken(tok)) continue;
    out.push_back(CaseFold(tok));
  }
  return out;
}

std::vector<std::string> ContentTokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& tok : MetricTokens(text)) {
    if (!IsStopword(tok)) out.push_back(std::move(tok));
  }
  return out;
}

}  // namespace preme
