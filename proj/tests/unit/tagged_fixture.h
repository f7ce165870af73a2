#pragma once

#include <string>
#include <vector>

#include "preme/tagger.h"
#include "preme/text.h"

namespace preme::testing {

// A tagged question whose tokens are "what about the <aspects...> of <subject> ?".
inline TaggedQuestion MakeTagged(const std::string& id, const std::string& subject,
                                 const std::vector<std::string>& aspects = {}) {
  TaggedQuestion q;
  q.id = id;
  auto add = [&q](const std::vector<std::string>& tokens, Label b, Label in) {
    const int start = static_cast<int>(q.tokens.size());
    for (size_t i = 0; i < tokens.size(); ++i) {
      q.tokens.push_back(tokens[i]);
      q.tags.labels.push_back(b == Label::kO ? Label::kO : (i == 0 ? b : in));
    }
    return Span{start, static_cast<int>(q.tokens.size())};
  };
  add({"what", "about", "the"}, Label::kO, Label::kO);
  for (size_t i = 0; i < aspects.size(); ++i) {
    if (i > 0) add({"and"}, Label::kO, Label::kO);
    q.tags.aspect_spans.push_back(add(Tokenize(aspects[i]), Label::kBeginAspect, Label::kInsideAspect));
  }
  add({"of"}, Label::kO, Label::kO);
  if (!subject.empty()) {
    q.tags.subject_spans.push_back(add(Tokenize(subject), Label::kBeginSubject, Label::kInsideSubject));
  }
  add({"?"}, Label::kO, Label::kO);
  q.pos.assign(q.tokens.size(), "NN");
  q.text = Detokenize(q.tokens);
  return q;
}

}  // namespace preme::testing
