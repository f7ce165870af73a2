#pragma once

#include <string>
#include <vector>

#include "preme/providers.h"

namespace preme {

// Deterministic Penn-tagset tagger: punctuation and numbers, a closed-class
// lexicon, capitalization, suffix rules and two context rules, with NN as
// the fallback. Good enough to give the CRF a stable POS signal offline.
class RulePosTagger : public PosProvider {
 public:
  std::vector<std::string> Tag(const std::vector<std::string>& tokens) override;
};

}  // namespace preme
