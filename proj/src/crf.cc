#include "preme/crf.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "preme/error.h"

namespace preme {
namespace {

double LogSumExp(const double* values, int n) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) m = std::max(m, values[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(values[i] - m);
  return m + std::log(s);
}

}  // namespace

std::vector<double> CrfModel::Parameters() const {
  std::vector<double> theta = state_weights.data();
  theta.insert(theta.end(), transition_weights.data().begin(),
               transition_weights.data().end());
  return theta;
}

void CrfModel::SetParameters(const std::vector<double>& theta) {
  const size_t ns = state_weights.data().size();
  if (theta.size() != ns + transition_weights.data().size()) {
    throw Error(ErrorCode::kDimensionMismatch, "parameter vector size");
  }
  std::copy(theta.begin(), theta.begin() + static_cast<long>(ns),
            state_weights.data().begin());
  std::copy(theta.begin() + static_cast<long>(ns), theta.end(),
            transition_weights.data().begin());
}

bool CrfModel::AllFinite() const {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return finite(state_weights.data()) && finite(transition_weights.data());
}

void CrfModel::CheckFinite() const {
  if (!AllFinite()) {
    throw Error(ErrorCode::kNumericalOverflow, "CRF weights are not finite");
  }
}

CrfModel MakeCrfModel(std::vector<std::string> label_set,
                      std::vector<std::string> feature_names,
                      double l2_lambda) {
  CrfModel model;
  const int labels = static_cast<int>(label_set.size());
  model.label_set = std::move(label_set);
  for (size_t i = 0; i < feature_names.size(); ++i) {
    auto [it, inserted] =
        model.feature_index.emplace(feature_names[i], static_cast<int>(i));
    if (!inserted) {
      throw Error(ErrorCode::kMalformedInput,
                  "duplicate feature name '" + feature_names[i] + "'");
    }
  }
  model.state_weights = Matrix(static_cast<int>(feature_names.size()), labels);
  model.transition_weights = Matrix(labels, labels);
  model.l2_lambda = l2_lambda;
  return model;
}

Matrix StateScores(const CrfModel& model, const FeatureSequence& seq) {
  const int T = static_cast<int>(seq.size());
  const int L = model.num_labels();
  Matrix scores(T, L);
  for (int t = 0; t < T; ++t) {
    for (int f : seq[static_cast<size_t>(t)]) {
      for (int y = 0; y < L; ++y) scores(t, y) += model.state_weights(f, y);
    }
  }
  return scores;
}

double SequenceScore(const CrfModel& model, const FeatureSequence& seq,
                     const std::vector<int>& labels) {
  const Matrix scores = StateScores(model, seq);
  double s = 0.0;
  for (size_t t = 0; t < labels.size(); ++t) {
    s += scores(static_cast<int>(t), labels[t]);
    if (t > 0) s += model.transition_weights(labels[t - 1], labels[t]);
  }
  return s;
}

namespace {

struct Lattice {
  Matrix scores;  // T x L
  Matrix alpha;   // log forward
  Matrix beta;    // log backward
  double log_z = 0.0;
};

Lattice RunForwardBackward(const CrfModel& model, const FeatureSequence& seq) {
  model.CheckFinite();
  const int T = static_cast<int>(seq.size());
  const int L = model.num_labels();
  if (T == 0) throw Error(ErrorCode::kMalformedInput, "empty sequence");
  Lattice lat;
  lat.scores = StateScores(model, seq);
  lat.alpha = Matrix(T, L);
  lat.beta = Matrix(T, L);
  std::vector<double> buf(static_cast<size_t>(L));
  for (int y = 0; y < L; ++y) lat.alpha(0, y) = lat.scores(0, y);
  for (int t = 1; t < T; ++t) {
    for (int y = 0; y < L; ++y) {
      for (int p = 0; p < L; ++p) {
        buf[static_cast<size_t>(p)] =
            lat.alpha(t - 1, p) + model.transition_weights(p, y);
      }
      lat.alpha(t, y) = LogSumExp(buf.data(), L) + lat.scores(t, y);
    }
  }
  for (int y = 0; y < L; ++y) lat.beta(T - 1, y) = 0.0;
  for (int t = T - 2; t >= 0; --t) {
    for (int y = 0; y < L; ++y) {
      for (int n = 0; n < L; ++n) {
        buf[static_cast<size_t>(n)] = model.transition_weights(y, n) +
                                      lat.scores(t + 1, n) + lat.beta(t + 1, n);
      }
      lat.beta(t, y) = LogSumExp(buf.data(), L);
    }
  }
  std::vector<double> last(static_cast<size_t>(L));
  for (int y = 0; y < L; ++y) last[static_cast<size_t>(y)] = lat.alpha(T - 1, y);
  lat.log_z = LogSumExp(last.data(), L);
  if (!std::isfinite(lat.log_z)) {
    throw Error(ErrorCode::kNumericalOverflow, "log partition is not finite");
  }
  return lat;
}

}  // namespace

ForwardBackwardResult ForwardBackward(const CrfModel& model,
                                      const FeatureSequence& seq) {
  Lattice lat = RunForwardBackward(model, seq);
  const int T = lat.scores.rows();
  const int L = lat.scores.cols();
  ForwardBackwardResult out;
  out.log_partition = lat.log_z;
  out.marginals = Matrix(T, L);
  for (int t = 0; t < T; ++t) {
    double row = 0.0;
    for (int y = 0; y < L; ++y) {
      out.marginals(t, y) = std::exp(lat.alpha(t, y) + lat.beta(t, y) - lat.log_z);
      row += out.marginals(t, y);
    }
    // Renormalize away the last ulps of rounding.
    for (int y = 0; y < L; ++y) out.marginals(t, y) /= row;
  }
  return out;
}

ViterbiResult Viterbi(const CrfModel& model, const FeatureSequence& seq) {
  model.CheckFinite();
  const int T = static_cast<int>(seq.size());
  const int L = model.num_labels();
  if (T == 0) throw Error(ErrorCode::kMalformedInput, "empty sequence");
  const Matrix scores = StateScores(model, seq);
  Matrix delta(T, L);
  std::vector<int> back(static_cast<size_t>(T * L), 0);
  for (int y = 0; y < L; ++y) delta(0, y) = scores(0, y);
  for (int t = 1; t < T; ++t) {
    for (int y = 0; y < L; ++y) {
      int best = 0;
      double best_score = delta(t - 1, 0) + model.transition_weights(0, y);
      for (int p = 1; p < L; ++p) {
        const double s = delta(t - 1, p) + model.transition_weights(p, y);
        if (s > best_score) {
          best_score = s;
          best = p;
        }
      }
      delta(t, y) = best_score + scores(t, y);
      back[static_cast<size_t>(t * L + y)] = best;
    }
  }
  int best = 0;
  for (int y = 1; y < L; ++y) {
    if (delta(T - 1, y) > delta(T - 1, best)) best = y;
  }
  ViterbiResult out;
  out.score = delta(T - 1, best);
  out.labels.assign(static_cast<size_t>(T), 0);
  out.labels[static_cast<size_t>(T - 1)] = best;
  for (int t = T - 1; t > 0; --t) {
    best = back[static_cast<size_t>(t * L + best)];
    out.labels[static_cast<size_t>(t - 1)] = best;
  }
  return out;
}

namespace {

// Adds log Z - score(gold) to `loss` and expected - empirical counts to
// `grad`.
void AccumulateSequence(const CrfModel& model, const LabeledSequence& ex,
                        double& loss, std::vector<double>& grad) {
  const int T = static_cast<int>(ex.features.size());
  const int L = model.num_labels();
  if (static_cast<int>(ex.labels.size()) != T) {
    throw Error(ErrorCode::kMalformedInput, "labels and features differ in length");
  }
  for (int y : ex.labels) {
    if (y < 0 || y >= L) {
      throw Error(ErrorCode::kUnknownLabel,
                  "label id " + std::to_string(y) + " outside label set");
    }
  }
  const Lattice lat = RunForwardBackward(model, ex.features);
  const size_t trans_offset =
      static_cast<size_t>(model.num_features()) * static_cast<size_t>(L);

  double gold = 0.0;
  for (int t = 0; t < T; ++t) {
    const int y = ex.labels[static_cast<size_t>(t)];
    gold += lat.scores(t, y);
    for (int f : ex.features[static_cast<size_t>(t)]) {
      grad[static_cast<size_t>(f * L + y)] -= 1.0;
    }
    if (t > 0) {
      const int p = ex.labels[static_cast<size_t>(t - 1)];
      gold += model.transition_weights(p, y);
      grad[trans_offset + static_cast<size_t>(p * L + y)] -= 1.0;
    }
  }
  loss += lat.log_z - gold;

  for (int t = 0; t < T; ++t) {
    for (int y = 0; y < L; ++y) {
      const double m = std::exp(lat.alpha(t, y) + lat.beta(t, y) - lat.log_z);
      for (int f : ex.features[static_cast<size_t>(t)]) {
        grad[static_cast<size_t>(f * L + y)] += m;
      }
    }
    if (t == 0) continue;
    for (int p = 0; p < L; ++p) {
      for (int y = 0; y < L; ++y) {
        const double pair = std::exp(lat.alpha(t - 1, p) +
                                     model.transition_weights(p, y) +
                                     lat.scores(t, y) + lat.beta(t, y) - lat.log_z);
        grad[trans_offset + static_cast<size_t>(p * L + y)] += pair;
      }
    }
  }
}

constexpr size_t kMaxChunks = 8;

}  // namespace

LossAndGradient NllAndGradient(const CrfModel& model,
                               const std::vector<LabeledSequence>& batch,
                               int threads) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyDataset, "empty batch");
  const size_t P = static_cast<size_t>(model.num_parameters());
  const size_t chunks = std::min(kMaxChunks, batch.size());
  std::vector<double> chunk_loss(chunks, 0.0);
  std::vector<std::vector<double>> chunk_grad(chunks, std::vector<double>(P, 0.0));
  std::vector<std::exception_ptr> errors(chunks);

  auto run_chunk = [&](size_t c) {
    const size_t begin = batch.size() * c / chunks;
    const size_t end = batch.size() * (c + 1) / chunks;
    try {
      for (size_t i = begin; i < end; ++i) {
        AccumulateSequence(model, batch[i], chunk_loss[c], chunk_grad[c]);
      }
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  const size_t workers = std::clamp<size_t>(static_cast<size_t>(std::max(1, threads)),
                                            1, chunks);
  if (workers == 1) {
    for (size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::jthread> pool;
    for (size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (size_t c = w; c < chunks; c += workers) run_chunk(c);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  LossAndGradient out;
  out.gradient.assign(P, 0.0);
  for (size_t c = 0; c < chunks; ++c) {
    out.loss += chunk_loss[c];
    for (size_t k = 0; k < P; ++k) out.gradient[k] += chunk_grad[c][k];
  }
  const std::vector<double> theta = model.Parameters();
  double sq = 0.0;
  for (size_t k = 0; k < P; ++k) {
    sq += theta[k] * theta[k];
    out.gradient[k] += model.l2_lambda * theta[k];
  }
  out.loss += 0.5 * model.l2_lambda * sq;
  return out;
}

}  // namespace preme
