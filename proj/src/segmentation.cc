#include "preme/segmentation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace preme {

void SegmentationConfig::Validate() const {
  if (block_size < 1) {
    throw Error(ErrorCode::kConfiguration, "block_size must be >= 1");
  }
  if (min_segment_turns < 1) {
    throw Error(ErrorCode::kConfiguration, "min_segment_turns must be >= 1");
  }
  if (!(threshold >= -1.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kConfiguration, "threshold must lie in [-1, 1]");
  }
  if (batch_size < 1) {
    throw Error(ErrorCode::kConfiguration, "batch_size must be >= 1");
  }
}

double Cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cosine of vectors with dimensions " + std::to_string(u.size()) +
                    " and " + std::to_string(v.size()));
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<Embedding> EmbedUtterances(const Transcript& transcript,
                                       EmbeddingProvider& provider,
                                       const SegmentationConfig& config) {
  std::vector<Embedding> out;
  out.reserve(transcript.turns.size());
  size_t dim = 0;
  const size_t batch = static_cast<size_t>(std::max(1, config.batch_size));
  for (size_t start = 0; start < transcript.turns.size(); start += batch) {
    const size_t end = std::min(transcript.turns.size(), start + batch);
    std::vector<std::string> texts;
    for (size_t i = start; i < end; ++i) texts.push_back(transcript.turns[i].text);
    auto vectors =
        CallWithRetries(config.retry, [&] { return provider.Embed(texts); });
    if (vectors.size() != texts.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "provider returned " + std::to_string(vectors.size()) +
                      " vectors for " + std::to_string(texts.size()) + " texts");
    }
    for (auto& v : vectors) {
      if (dim == 0) dim = v.size();
      if (v.empty() || v.size() != dim) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "expected dimension " + std::to_string(dim) + ", got " +
                        std::to_string(v.size()));
      }
      for (double x : v) {
        if (!std::isfinite(x)) {
          throw Error(ErrorCode::kMalformedInput, "non-finite embedding entry");
        }
      }
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<Embedding> BlockPool(std::span<const Embedding> embeddings,
                                 int block_size) {
  std::vector<Embedding> blocks;
  const size_t step = static_cast<size_t>(std::max(1, block_size));
  for (size_t start = 0; start < embeddings.size(); start += step) {
    const size_t end = std::min(embeddings.size(), start + step);
    Embedding pooled = embeddings[start];
    for (size_t i = start + 1; i < end; ++i) {
      if (embeddings[i].size() != pooled.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "ragged embeddings");
      }
      for (size_t j = 0; j < pooled.size(); ++j) {
        pooled[j] = std::max(pooled[j], embeddings[i][j]);
      }
    }
    blocks.push_back(std::move(pooled));
  }
  return blocks;
}

std::vector<int> DetectBoundaries(std::span<const Embedding> blocks,
                                  double threshold) {
  std::vector<int> boundaries;
  for (size_t i = 0; i + 1 < blocks.size(); ++i) {
    if (Cosine(blocks[i], blocks[i + 1]) < threshold) {
      boundaries.push_back(static_cast<int>(i));
    }
  }
  return boundaries;
}

std::string SegmentId(int ordinal) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "seg-%02d", ordinal);
  return buf;
}

std::vector<Segment> SegmentEmbeddings(const std::string& meeting_id,
                                       std::span<const Embedding> embeddings,
                                       const SegmentationConfig& config) {
  config.Validate();
  const int n = static_cast<int>(embeddings.size());
  if (n == 0) throw Error(ErrorCode::kEmptyTranscript, "no embeddings");

  const auto blocks = BlockPool(embeddings, config.block_size);
  std::vector<TurnRange> ranges;
  int start = 0;
  for (int b : DetectBoundaries(blocks, config.threshold)) {
    const int cut = (b + 1) * config.block_size;
    ranges.push_back(TurnRange{start, cut});
    start = cut;
  }
  ranges.push_back(TurnRange{start, n});

  std::vector<TurnRange> merged;
  for (const TurnRange& r : ranges) {
    if (!merged.empty() && r.size() < config.min_segment_turns) {
      merged.back().end = r.end;
    } else {
      merged.push_back(r);
    }
  }
  // A short leading segment has no predecessor; fold it forward instead.
  if (merged.size() > 1 && merged.front().size() < config.min_segment_turns) {
    merged[1].start = merged[0].start;
    merged.erase(merged.begin());
  }

  std::vector<Segment> segments;
  for (size_t i = 0; i < merged.size(); ++i) {
    segments.push_back(
        Segment{SegmentId(static_cast<int>(i) + 1), merged[i], meeting_id});
  }
  return segments;
}

std::vector<Segment> SegmentTranscript(const Transcript& transcript,
                                       const SegmentationConfig& config,
                                       EmbeddingProvider& provider) {
  config.Validate();
  const auto embeddings = EmbedUtterances(transcript, provider, config);
  return SegmentEmbeddings(transcript.meeting_id, embeddings, config);
}

}  // namespace preme
