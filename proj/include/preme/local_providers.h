#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "preme/providers.h"

namespace preme {

uint64_t Fnv1a(std::string_view bytes, uint64_t seed = 1469598103934665603ULL);

// Deterministic bag-of-words embedding: content tokens (stopwords dropped,
// plural "s" stripped) are hashed into `dimension` non-negative buckets and
// the result is L2-normalized. Texts without content tokens map to the zero
// vector.
class HashEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(int dimension = 256) : dimension_(dimension) {}

  std::vector<Embedding> Embed(const std::vector<std::string>& texts) override;
  Embedding EmbedOne(std::string_view text) const;

  int dimension() const { return dimension_; }

 private:
  int dimension_;
};

// Offline stand-in for a sampled language model. Output is a numbered list
// of questions built from the most frequent content phrases of the excerpt
// embedded in the prompt. It is a pure function of (seed, prompt, temperature,
// trial); at temperature 0 the trial is ignored, like greedy decoding.
class MockGenerationProvider : public GenerationProvider {
 public:
  explicit MockGenerationProvider(uint64_t seed = 0) : seed_(seed) {}
  std::string Generate(const GenerationRequest& request) override;

 private:
  uint64_t seed_;
};

}  // namespace preme
