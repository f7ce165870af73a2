#include "preme/pos_tagger.h"

#include <cctype>
#include <string_view>
#include <unordered_map>

#include "preme/text.h"

namespace preme {
namespace {

const std::unordered_map<std::string, std::string>& Lexicon() {
  static const auto* lex = [] {
    auto* m = new std::unordered_map<std::string, std::string>;
    auto add = [m](std::initializer_list<const char*> words, const char* tag) {
      for (const char* w : words) m->emplace(w, tag);
    };
    add({"the", "a", "an", "this", "that", "these", "those", "every", "each",
         "some", "any", "no", "all", "another", "both", "either", "neither"},
        "DT");
    add({"of", "in", "on", "at", "for", "with", "by", "from", "about", "into",
         "over", "under", "between", "through", "during", "without", "within",
         "after", "before", "as", "like", "than", "against", "among", "per",
         "across", "towards", "toward", "upon", "regarding", "since"},
        "IN");
    add({"to"}, "TO");
    add({"i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them",
         "themselves", "itself", "ourselves"},
        "PRP");
    add({"my", "your", "his", "its", "our", "their", "her"}, "PRP$");
    add({"what", "who", "whom"}, "WP");
    add({"whose"}, "WP$");
    add({"which"}, "WDT");
    add({"how", "when", "where", "why"}, "WRB");
    add({"can", "could", "will", "would", "shall", "should", "may", "might",
         "must"},
        "MD");
    add({"is", "does", "has"}, "VBZ");
    add({"are", "am", "do", "have"}, "VBP");
    add({"was", "were", "did", "had"}, "VBD");
    add({"be"}, "VB");
    add({"been"}, "VBN");
    add({"being"}, "VBG");
    add({"and", "or", "but", "nor", "yet"}, "CC");
    add({"not", "n't", "also", "very", "too", "so", "just", "only", "there's"},
        "RB");
    add({"there"}, "EX");
    add({"more", "less"}, "JJR");
    add({"most", "least"}, "JJS");
    add({"main", "new", "good", "bad", "large", "small", "big", "important",
         "difficult", "easy", "different", "other", "own", "overall", "key",
         "final", "current", "general", "specific", "industrial"},
        "JJ");
    return m;
  }();
  return *lex;
}

bool EndsWith(std::string_view s, std::string_view suffix) {
  return s.size() > suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

std::string PunctuationTag(const std::string& tok) {
  if (tok == "?" || tok == "." || tok == "!") return ".";
  if (tok == ",") return ",";
  if (tok == ":" || tok == ";" || tok == "-" || tok == "--") return ":";
  if (tok == "\"" || tok == "'") return "''";
  if (tok == "(" || tok == "[" || tok == "{") return "-LRB-";
  if (tok == ")" || tok == "]" || tok == "}") return "-RRB-";
  if (tok == "$") return "$";
  return "SYM";
}

bool IsNumber(std::string_view tok) {
  bool digit = false;
  for (char c : tok) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit = true;
    } else if (c != '.' && c != ',') {
      return false;
    }
  }
  return digit;
}

std::string SuffixTag(const std::string& w) {
  if (EndsWith(w, "ing")) return "VBG";
  if (EndsWith(w, "ed")) return "VBD";
  if (EndsWith(w, "ly")) return "RB";
  if (EndsWith(w, "est") && w.size() > 5) return "JJS";
  for (std::string_view s : {"tion", "sion", "ment", "ness", "ity", "ance",
                             "ence", "ship", "ism"}) {
    if (EndsWith(w, s)) return "NN";
  }
  for (std::string_view s : {"ous", "ful", "able", "ible", "ive", "ic", "less",
                             "al", "ary"}) {
    if (EndsWith(w, s)) return "JJ";
  }
  if (w.size() > 3 && w.back() == 's' && !EndsWith(w, "ss") &&
      !EndsWith(w, "us") && !EndsWith(w, "is")) {
    return "NNS";
  }
  return "NN";
}

}  // namespace

std::vector<std::string> RulePosTagger::Tag(const std::vector<std::string>& tokens) {
  std::vector<std::string> tags;
  tags.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    const std::string lower = CaseFold(tok);
    std::string tag;
    if (IsPunctuationToken(tok)) {
      tag = PunctuationTag(tok);
    } else if (IsNumber(tok)) {
      tag = "CD";
    } else if (lower == "'s") {
      tag = "POS";
    } else if (auto it = Lexicon().find(lower); it != Lexicon().end()) {
      tag = it->second;
    } else if (i > 0 && std::isupper(static_cast<unsigned char>(tok[0]))) {
      tag = lower.back() == 's' && lower.size() > 3 ? "NNPS" : "NNP";
    } else {
      tag = SuffixTag(lower);
      // Bare verb after a modal or infinitival "to".
      if (i > 0 && (tags.back() == "MD" || tags.back() == "TO") &&
          (tag == "NN" || tag == "VBD")) {
        tag = "VB";
      }
      // Past participle after a form of "be" or "have".
      if (tag == "VBD" && i > 0 &&
          (tags.back().starts_with("VB") || tags.back() == "RB")) {
        tag = "VBN";
      }
    }
    tags.push_back(std::move(tag));
  }
  return tags;
}

}  // namespace preme
