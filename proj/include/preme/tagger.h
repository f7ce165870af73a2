#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "preme/crf.h"
#include "preme/labels.h"
#include "preme/providers.h"
#include "preme/transcript.h"

namespace preme {

// "Remote" -> "Xx", "2048" -> "d", "e-mail" -> "x-x": uppercase X, lowercase
// x, digit d, anything else kept, then runs of the same symbol collapsed.
std::string WordShape(std::string_view token);

// Features of position i: bias, lowercased identity, 2- and 3-character
// suffixes, shape and POS; identity, 3-suffix, shape and POS of the left and
// right neighbors (or BOS/EOS sentinels); first/last flags.
std::vector<std::string> ExtractFeatures(const std::vector<std::string>& tokens,
                                         const std::vector<std::string>& pos,
                                         int i);

// Label names in Label id order.
std::vector<std::string> TaggerLabelSet();

// Feature ids known to the model, per position; unseen features are dropped.
FeatureSequence CompileFeatures(const CrfModel& model,
                                const std::vector<std::string>& tokens,
                                const std::vector<std::string>& pos);

LabeledSequence CompileExample(const CrfModel& model,
                               const AnnotatedQuestion& example);

// Zero-weight model whose feature index holds every feature that fires in
// `data`, ids assigned in lexicographic order.
CrfModel NewTaggerModel(const std::vector<AnnotatedQuestion>& data,
                        double l2_lambda);

LossAndGradient TaggerNllAndGradient(const CrfModel& model,
                                     const std::vector<AnnotatedQuestion>& batch,
                                     int threads = 1);

struct TrainConfig {
  double l2_lambda = 0.1;
  int max_iterations = 200;
  double convergence_tol = 1e-6;
  uint64_t seed = 0;  // fold shuffling in CrossValidate; training is deterministic
  int threads = 1;
};

struct TrainResult {
  CrfModel model;
  std::vector<double> loss_history;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

// Throws EmptyDataset on an empty dataset. A dataset whose labels are all
// identical still trains, with a DegenerateDataset warning.
TrainResult Train(const std::vector<AnnotatedQuestion>& data,
                  const TrainConfig& config);

struct TagResult {
  std::vector<Label> labels;
  std::vector<Span> subject_spans;
  std::vector<Span> aspect_spans;
  double sequence_log_prob = 0.0;
};

TagResult ViterbiDecode(const CrfModel& model,
                        const std::vector<std::string>& tokens,
                        const std::vector<std::string>& pos);

struct TaggedQuestion {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  std::vector<std::string> pos;
  TagResult tags;

  std::vector<std::string> Subjects() const;
  std::vector<std::string> Aspects() const;
};

TaggedQuestion TagQuestion(const CrfModel& model, PosProvider& pos,
                           const std::string& id, const std::string& text);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Indexed by TokenClass: subject, aspect, N/A.
using ClassReport = std::array<ClassScores, 3>;

// Token-level scores on collapsed classes. A class absent from both gold and
// prediction scores 1.0; otherwise an empty denominator scores 0.
ClassReport ScoreTokens(const std::vector<std::vector<Label>>& gold,
                        const std::vector<std::vector<Label>>& predicted);

// Seeded Fisher-Yates shuffle of 0..n-1, then k contiguous folds whose sizes
// differ by at most one (larger folds first).
std::vector<std::vector<int>> FoldIndices(int n, int k, uint64_t seed);

struct CrossValidationReport {
  ClassReport mean;  // averaged over folds
  std::vector<ClassReport> per_fold;
  std::vector<int> fold_sizes;
};

// Throws InsufficientData when the dataset has fewer than k examples.
CrossValidationReport CrossValidate(const std::vector<AnnotatedQuestion>& data,
                                    int k, const TrainConfig& config);

nlohmann::json ModelToJson(const CrfModel& model);
CrfModel ModelFromJson(const nlohmann::json& j);

}  // namespace preme
