#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace preme {

// Rule-based tokenizer shared by the tagger features, the metrics and the
// question windowing. Rules, applied left to right inside each
// whitespace-delimited chunk:
//   - a trailing "'s" clitic (followed by a non-word character or end of
//     chunk) becomes its own token: "dial's" -> "dial", "'s";
//   - an apostrophe or hyphen between two word characters stays inside the
//     word ("don't", "well-known");
//   - '.' and ',' between two digits stay inside the number ("3.5", "1,000");
//   - any other ASCII punctuation character is a one-character token.
// Word characters are ASCII alphanumerics and every non-ASCII byte, so UTF-8
// sequences are never split. Case is preserved.
std::vector<std::string> Tokenize(std::string_view text);

// ASCII lowercase; non-ASCII bytes pass through unchanged.
std::string CaseFold(std::string_view text);

// Trims, collapses internal whitespace runs to one space.
std::string CollapseWhitespace(std::string_view text);

std::string Trim(std::string_view text);

std::string Join(const std::vector<std::string>& parts, std::string_view sep);

// Joins tokens with single spaces, except no space before "'s" or before
// closing punctuation. Tokenize(Detokenize(t)) == t for tokenizer output.
std::string Detokenize(const std::vector<std::string>& tokens);

bool IsPunctuationToken(std::string_view token);

bool IsStopword(std::string_view lowercase_token);

// Casefolded tokens with punctuation-only tokens removed. Used by every
// lexical metric so "?" never counts as overlap.
std::vector<std::string> MetricTokens(std::string_view text);

// MetricTokens minus stopwords.
std::vector<std::string> ContentTokens(std::string_view text);

}  // namespace preme
