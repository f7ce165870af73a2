#pragma once

#include <map>
#include <string>
#include <vector>

namespace preme {

// Dense row-major matrix, just enough for the CRF tables.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        data_(static_cast<size_t>(rows) * static_cast<size_t>(cols), fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) { return data_[Index(r, c)]; }
  double operator()(int r, int c) const { return data_[Index(r, c)]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  size_t Index(int r, int c) const {
    return static_cast<size_t>(r) * static_cast<size_t>(cols_) +
           static_cast<size_t>(c);
  }
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Linear-chain CRF parameters: one weight per (feature, label) pair and one
// per (previous label, label) transition. There are no start/stop weights.
struct CrfModel {
  std::vector<std::string> label_set;
  std::map<std::string, int> feature_index;
  Matrix state_weights;       // num_features x num_labels
  Matrix transition_weights;  // num_labels x num_labels, [prev][cur]
  double l2_lambda = 0.1;

  int num_labels() const { return static_cast<int>(label_set.size()); }
  int num_features() const { return state_weights.rows(); }
  int num_parameters() const {
    return num_features() * num_labels() + num_labels() * num_labels();
  }

  // Flat parameter vector: state weights then transitions.
  std::vector<double> Parameters() const;
  void SetParameters(const std::vector<double>& theta);

  bool AllFinite() const;
  // Throws NumericalOverflow if any weight is NaN or infinite.
  void CheckFinite() const;
};

CrfModel MakeCrfModel(std::vector<std::string> label_set,
                      std::vector<std::string> feature_names,
                      double l2_lambda);

// Active feature ids per position.
using FeatureSequence = std::vector<std::vector<int>>;

struct LabeledSequence {
  FeatureSequence features;
  std::vector<int> labels;
};

// T x L table of per-position label scores.
Matrix StateScores(const CrfModel& model, const FeatureSequence& seq);

double SequenceScore(const CrfModel& model, const FeatureSequence& seq,
                     const std::vector<int>& labels);

struct ForwardBackwardResult {
  double log_partition = 0.0;
  Matrix marginals;  // T x L, rows sum to 1
};

// Log-space forward-backward with log-sum-exp.
ForwardBackwardResult ForwardBackward(const CrfModel& model,
                                      const FeatureSequence& seq);

struct ViterbiResult {
  std::vector<int> labels;
  double score = 0.0;
};

// Argmax label sequence. At every step ties go to the smallest label id.
ViterbiResult Viterbi(const CrfModel& model, const FeatureSequence& seq);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // same layout as CrfModel::Parameters()
};

// sum_i (log Z_i - score_i(gold)) + lambda/2 * |w|^2 and its gradient
// (expected minus empirical counts plus lambda * w). Sequences are processed
// in fixed contiguous chunks and reduced in chunk order, so the result is
// bitwise independent of `threads`. Throws UnknownLabel on out-of-range
// gold labels.
LossAndGradient NllAndGradient(const CrfModel& model,
                               const std::vector<LabeledSequence>& batch,
                               int threads = 1);

}  // namespace preme
