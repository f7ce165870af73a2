#pragma once

#include <span>
#include <string>
#include <vector>

#include "preme/providers.h"
#include "preme/transcript.h"

namespace preme {

struct SegmentationConfig {
  int block_size = 3;          // utterances per pooled block
  double threshold = 0.55;     // adjacent-block cosine below this is a boundary
  int min_segment_turns = 5;   // shorter segments merge into the preceding one
  int batch_size = 64;         // texts per embedding request
  RetryPolicy retry;

  void Validate() const;
};

struct Segment {
  std::string segment_id;
  TurnRange turns;
  std::string meeting_id;

  friend bool operator==(const Segment&, const Segment&) = default;
};

// Cosine similarity; 0 when either vector is zero. Throws
// DimensionMismatch on length mismatch.
double Cosine(std::span<const double> u, std::span<const double> v);

// One vector per turn, in turn order. Requests are batched and retried;
// inconsistent dimensions raise DimensionMismatch.
std::vector<Embedding> EmbedUtterances(const Transcript& transcript,
                                       EmbeddingProvider& provider,
                                       const SegmentationConfig& config = {});

// Coordinatewise max over consecutive blocks of `block_size` vectors; the
// final partial block pools only its actual members.
std::vector<Embedding> BlockPool(std::span<const Embedding> embeddings,
                                 int block_size);

// Indices i such that cosine(blocks[i], blocks[i+1]) < threshold.
std::vector<int> DetectBoundaries(std::span<const Embedding> blocks,
                                  double threshold);

// Segment ids are "seg-01", "seg-02", ... in turn order.
std::string SegmentId(int ordinal);

// Pure part of Segment(): pooling, boundary detection, mapping back to
// turns and merging of short segments.
std::vector<Segment> SegmentEmbeddings(const std::string& meeting_id,
                                       std::span<const Embedding> embeddings,
                                       const SegmentationConfig& config);

std::vector<Segment> SegmentTranscript(const Transcript& transcript,
                                       const SegmentationConfig& config,
                                       EmbeddingProvider& provider);

}  // namespace preme
