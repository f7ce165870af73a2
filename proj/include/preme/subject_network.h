#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "preme/crf.h"
#include "preme/providers.h"
#include "preme/tagger.h"

namespace preme {

struct SubjectNode {
  std::string text;
  Embedding embedding;
  std::vector<std::string> source_question_ids;
};

// Complete weighted undirected graph over distinct subjects. Weights are
// symmetric, in [0, 1], with a zero diagonal.
struct SubjectNetwork {
  std::vector<SubjectNode> nodes;
  Matrix weights;

  int size() const { return static_cast<int>(nodes.size()); }
};

// max(0, cosine(u, v)); zero vectors give 0. Throws DimensionMismatch.
double EdgeWeight(const Embedding& u, const Embedding& v);

SubjectNetwork BuildSubjectNetwork(std::vector<SubjectNode> nodes);

struct PageRankOptions {
  double damping = 0.85;
  double tol = 1e-10;  // L1 change between iterates
  int max_iter = 10000;
};

struct PageRankResult {
  std::vector<double> scores;  // positive, sums to 1
  int iterations = 0;
  bool converged = false;
};

// Weighted PageRank by power iteration with uniform teleportation. Row i
// moves mass to j in proportion to weights(i, j); rows without weight spread
// uniformly over all nodes. Hitting max_iter returns the last iterate with
// converged = false and a logged warning.
PageRankResult PageRank(const Matrix& weights, const PageRankOptions& options = {});

struct SubjectSelection {
  int index = 0;
  PageRankResult pagerank;
};

// PageRank argmax. Scores within 1e-12 of each other tie; ties go to more
// source questions, then shorter text, then lexicographically smaller text.
SubjectSelection SelectSubject(const SubjectNetwork& network,
                               const PageRankOptions& options = {});

// Indices of nodes whose edge weight to `s_norm` is >= merge_threshold,
// always including s_norm itself, in node order.
std::vector<int> FilterSimilarSubjects(const SubjectNetwork& network, int s_norm,
                                       double merge_threshold);

// Token-bigram Jaccard (unigram when either side has fewer than two tokens)
// over casefolded, punctuation-free tokens.
double NgramJaccard(const std::string& a, const std::string& b);

// Greedy scan that keeps a text unless its Jaccard with an already kept text
// reaches the threshold.
std::vector<std::string> DedupeNgrams(const std::vector<std::string>& texts,
                                      double jaccard_threshold);

inline constexpr const char* kGeneralAspect = "(general)";

struct AspectEntry {
  std::string aspect;
  std::vector<std::string> question_ids;
};

// For every question with a subject span matching (case-insensitively) one of
// `merged_subjects`, files the question under each of its aspect spans, or
// under "(general)" when it has none. Aspect keys that n-gram-duplicate an
// earlier key are folded into it. Order: "(general)" first if present, then
// first appearance.
std::vector<AspectEntry> MapAspects(const std::vector<std::string>& merged_subjects,
                                    const std::vector<TaggedQuestion>& questions,
                                    double jaccard_threshold);

struct NormalizationConfig {
  double merge_threshold = 0.7;
  double jaccard_threshold = 0.5;
  PageRankOptions pagerank;
  RetryPolicy retry;
};

struct NormalizationResult {
  std::string segment_id;
  std::vector<SubjectNode> nodes;  // every distinct subject of the segment
  std::vector<double> pagerank_scores;
  int s_norm = -1;                 // index into nodes; -1 when no subjects
  std::vector<int> merged;         // indices into nodes, s_norm included
  std::vector<AspectEntry> aspects;

  bool has_subject() const { return s_norm >= 0; }
  const std::string& subject() const { return nodes.at(static_cast<size_t>(s_norm)).text; }
};

// Distinct subject spans (casefolded identity, first spelling kept) become
// nodes; one subject is selected per segment and similar ones are merged.
NormalizationResult NormalizeSegment(const std::string& segment_id,
                                     const std::vector<TaggedQuestion>& questions,
                                     EmbeddingProvider& embedder,
                                     const NormalizationConfig& config = {});

nlohmann::json NormalizationToJson(const NormalizationResult& result);
NormalizationResult NormalizationFromJson(const nlohmann::json& j);

}  // namespace preme
