#include "preme/tagger.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <spdlog/spdlog.h>

#include "preme/error.h"
#include "preme/lbfgs.h"
#include "preme/text.h"

namespace preme {

using nlohmann::json;

std::string WordShape(std::string_view token) {
  std::string shape;
  for (char c : token) {
    char s = c;
    if (c >= 'A' && c <= 'Z') {
      s = 'X';
    } else if (c >= 'a' && c <= 'z') {
      s = 'x';
    } else if (c >= '0' && c <= '9') {
      s = 'd';
    }
    if (shape.empty() || shape.back() != s) shape.push_back(s);
  }
  return shape;
}

namespace {

std::string Suffix(const std::string& lower, size_t n) {
  return lower.size() <= n ? lower : lower.substr(lower.size() - n);
}

void NeighborFeatures(const std::vector<std::string>& tokens,
                      const std::vector<std::string>& pos, int j,
                      const std::string& prefix, std::vector<std::string>& out) {
  const int n = static_cast<int>(tokens.size());
  if (j < 0) {
    out.push_back(prefix + "BOS");
    return;
  }
  if (j >= n) {
    out.push_back(prefix + "EOS");
    return;
  }
  const std::string lower = CaseFold(tokens[static_cast<size_t>(j)]);
  out.push_back(prefix + "lower=" + lower);
  out.push_back(prefix + "suffix3=" + Suffix(lower, 3));
  out.push_back(prefix + "shape=" + WordShape(tokens[static_cast<size_t>(j)]));
  out.push_back(prefix + "pos=" + pos[static_cast<size_t>(j)]);
}

}  // namespace

std::vector<std::string> ExtractFeatures(const std::vector<std::string>& tokens,
                                         const std::vector<std::string>& pos,
                                         int i) {
  const int n = static_cast<int>(tokens.size());
  if (i < 0 || i >= n || pos.size() != tokens.size()) {
    throw Error(ErrorCode::kMalformedInput, "feature position out of range");
  }
  const std::string& tok = tokens[static_cast<size_t>(i)];
  const std::string lower = CaseFold(tok);
  std::vector<std::string> f;
  f.reserve(16);
  f.push_back("bias");
  f.push_back("lower=" + lower);
  f.push_back("suffix2=" + Suffix(lower, 2));
  f.push_back("suffix3=" + Suffix(lower, 3));
  f.push_back("shape=" + WordShape(tok));
  f.push_back("pos=" + pos[static_cast<size_t>(i)]);
  NeighborFeatures(tokens, pos, i - 1, "-1:", f);
  NeighborFeatures(tokens, pos, i + 1, "+1:", f);
  if (i == 0) f.push_back("first");
  if (i == n - 1) f.push_back("last");
  return f;
}

std::vector<std::string> TaggerLabelSet() {
  std::vector<std::string> names;
  for (Label l : kAllLabels) names.emplace_back(LabelName(l));
  return names;
}

FeatureSequence CompileFeatures(const CrfModel& model,
                                const std::vector<std::string>& tokens,
                                const std::vector<std::string>& pos) {
  FeatureSequence seq(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    for (const auto& name : ExtractFeatures(tokens, pos, static_cast<int>(i))) {
      if (auto it = model.feature_index.find(name); it != model.feature_index.end()) {
        seq[i].push_back(it->second);
      }
    }
  }
  return seq;
}

LabeledSequence CompileExample(const CrfModel& model,
                               const AnnotatedQuestion& example) {
  if (example.pos.size() != example.tokens.size() ||
      example.labels.size() != example.tokens.size()) {
    throw Error(ErrorCode::kMalformedInput, "parallel lists differ in length");
  }
  LabeledSequence out;
  out.features = CompileFeatures(model, example.tokens, example.pos);
  for (Label l : example.labels) out.labels.push_back(static_cast<int>(l));
  return out;
}

CrfModel NewTaggerModel(const std::vector<AnnotatedQuestion>& data,
                        double l2_lambda) {
  std::set<std::string> names;
  for (const auto& q : data) {
    for (int i = 0; i < q.size(); ++i) {
      for (auto& f : ExtractFeatures(q.tokens, q.pos, i)) names.insert(std::move(f));
    }
  }
  return MakeCrfModel(TaggerLabelSet(),
                      std::vector<std::string>(names.begin(), names.end()),
                      l2_lambda);
}

LossAndGradient TaggerNllAndGradient(const CrfModel& model,
                                     const std::vector<AnnotatedQuestion>& batch,
                                     int threads) {
  std::vector<LabeledSequence> compiled;
  compiled.reserve(batch.size());
  for (const auto& q : batch) compiled.push_back(CompileExample(model, q));
  return NllAndGradient(model, compiled, threads);
}

TrainResult Train(const std::vector<AnnotatedQuestion>& data,
                  const TrainConfig& config) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "no training data");
  TrainResult result;
  std::set<Label> distinct;
  for (const auto& q : data) distinct.insert(q.labels.begin(), q.labels.end());
  if (distinct.size() <= 1) {
    result.warnings.push_back("DegenerateDataset: every token has the same label");
    spdlog::warn("{}", result.warnings.back());
  }

  CrfModel model = NewTaggerModel(data, config.l2_lambda);
  std::vector<LabeledSequence> compiled;
  compiled.reserve(data.size());
  for (const auto& q : data) compiled.push_back(CompileExample(model, q));

  CrfModel scratch = model;
  auto objective = [&](const std::vector<double>& theta, std::vector<double>& grad) {
    scratch.SetParameters(theta);
    if (!scratch.AllFinite()) return std::numeric_limits<double>::infinity();
    auto lg = NllAndGradient(scratch, compiled, config.threads);
    grad = std::move(lg.gradient);
    return lg.loss;
  };
  LbfgsOptions options;
  options.max_iterations = config.max_iterations;
  options.convergence_tol = config.convergence_tol;
  auto opt = MinimizeLbfgs(objective, model.Parameters(), options);

  model.SetParameters(opt.x);
  model.CheckFinite();
  result.model = std::move(model);
  result.loss_history = std::move(opt.loss_history);
  result.iterations = opt.iterations;
  result.converged = opt.converged;
  return result;
}

TagResult ViterbiDecode(const CrfModel& model,
                        const std::vector<std::string>& tokens,
                        const std::vector<std::string>& pos) {
  if (model.num_labels() != kNumLabels) {
    throw Error(ErrorCode::kInconsistentInputs, "model is not a tagger model");
  }
  const FeatureSequence seq = CompileFeatures(model, tokens, pos);
  const ViterbiResult best = Viterbi(model, seq);
  const ForwardBackwardResult fb = ForwardBackward(model, seq);
  TagResult out;
  for (int y : best.labels) out.labels.push_back(static_cast<Label>(y));
  const SpanSet spans = SpansFromLabels(out.labels);
  out.subject_spans = spans.subjects;
  out.aspect_spans = spans.aspects;
  out.sequence_log_prob = std::min(0.0, best.score - fb.log_partition);
  return out;
}

std::vector<std::string> TaggedQuestion::Subjects() const {
  std::vector<std::string> out;
  for (const Span& s : tags.subject_spans) out.push_back(SpanText(tokens, s));
  return out;
}

std::vector<std::string> TaggedQuestion::Aspects() const {
  std::vector<std::string> out;
  for (const Span& s : tags.aspect_spans) out.push_back(SpanText(tokens, s));
  return out;
}

TaggedQuestion TagQuestion(const CrfModel& model, PosProvider& pos,
                           const std::string& id, const std::string& text) {
  TaggedQuestion q;
  q.id = id;
  q.text = text;
  q.tokens = Tokenize(text);
  if (q.tokens.empty()) {
    throw Error(ErrorCode::kMalformedInput, "question '" + id + "' is empty");
  }
  q.pos = pos.Tag(q.tokens);
  if (q.pos.size() != q.tokens.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "POS provider returned " +
                                                   std::to_string(q.pos.size()) +
                                                   " tags for " +
                                                   std::to_string(q.tokens.size()) +
                                                   " tokens");
  }
  q.tags = ViterbiDecode(model, q.tokens, q.pos);
  return q;
}

ClassReport ScoreTokens(const std::vector<std::vector<Label>>& gold,
                        const std::vector<std::vector<Label>>& predicted) {
  if (gold.size() != predicted.size()) {
    throw Error(ErrorCode::kInconsistentInputs, "gold/predicted count mismatch");
  }
  std::array<long, 3> tp{}, fp{}, fn{};
  for (size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != predicted[s].size()) {
      throw Error(ErrorCode::kInconsistentInputs, "sequence length mismatch");
    }
    for (size_t i = 0; i < gold[s].size(); ++i) {
      const auto g = static_cast<size_t>(CollapsedClass(gold[s][i]));
      const auto p = static_cast<size_t>(CollapsedClass(predicted[s][i]));
      if (g == p) {
        ++tp[g];
      } else {
        ++fn[g];
        ++fp[p];
      }
    }
  }
  ClassReport report;
  for (size_t c = 0; c < 3; ++c) {
    ClassScores& sc = report[c];
    if (tp[c] + fp[c] + fn[c] == 0) {
      sc = ClassScores{1.0, 1.0, 1.0};
      continue;
    }
    sc.precision = tp[c] + fp[c] > 0 ? double(tp[c]) / double(tp[c] + fp[c]) : 0.0;
    sc.recall = tp[c] + fn[c] > 0 ? double(tp[c]) / double(tp[c] + fn[c]) : 0.0;
    sc.f1 = sc.precision + sc.recall > 0
                ? 2.0 * sc.precision * sc.recall / (sc.precision + sc.recall)
                : 0.0;
  }
  return report;
}

std::vector<std::vector<int>> FoldIndices(int n, int k, uint64_t seed) {
  if (k < 1 || n < k) {
    throw Error(ErrorCode::kInsufficientData,
                std::to_string(n) + " examples cannot form " + std::to_string(k) +
                    " folds");
  }
  std::vector<int> perm(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng() % static_cast<uint64_t>(i + 1));
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
  }
  std::vector<std::vector<int>> folds(static_cast<size_t>(k));
  int pos = 0;
  for (int f = 0; f < k; ++f) {
    const int size = n / k + (f < n % k ? 1 : 0);
    folds[static_cast<size_t>(f)].assign(perm.begin() + pos, perm.begin() + pos + size);
    pos += size;
  }
  return folds;
}

CrossValidationReport CrossValidate(const std::vector<AnnotatedQuestion>& data,
                                    int k, const TrainConfig& config) {
  const auto folds = FoldIndices(static_cast<int>(data.size()), k, config.seed);
  CrossValidationReport report;
  for (size_t f = 0; f < folds.size(); ++f) {
    std::vector<bool> held(data.size(), false);
    for (int i : folds[f]) held[static_cast<size_t>(i)] = true;
    std::vector<AnnotatedQuestion> train;
    for (size_t i = 0; i < data.size(); ++i) {
      if (!held[i]) train.push_back(data[i]);
    }
    const TrainResult trained = Train(train, config);
    std::vector<std::vector<Label>> gold, predicted;
    for (int i : folds[f]) {
      const auto& q = data[static_cast<size_t>(i)];
      gold.push_back(q.labels);
      predicted.push_back(ViterbiDecode(trained.model, q.tokens, q.pos).labels);
    }
    report.per_fold.push_back(ScoreTokens(gold, predicted));
    report.fold_sizes.push_back(static_cast<int>(folds[f].size()));
  }
  for (size_t c = 0; c < 3; ++c) {
    ClassScores& m = report.mean[c];
    for (const auto& fold : report.per_fold) {
      m.precision += fold[c].precision;
      m.recall += fold[c].recall;
      m.f1 += fold[c].f1;
    }
    const double denom = static_cast<double>(report.per_fold.size());
    m.precision /= denom;
    m.recall /= denom;
    m.f1 /= denom;
  }
  return report;
}

json ModelToJson(const CrfModel& model) {
  json state = json::array();
  for (int f = 0; f < model.num_features(); ++f) {
    json row = json::array();
    for (int y = 0; y < model.num_labels(); ++y) row.push_back(model.state_weights(f, y));
    state.push_back(std::move(row));
  }
  json trans = json::array();
  for (int p = 0; p < model.num_labels(); ++p) {
    json row = json::array();
    for (int y = 0; y < model.num_labels(); ++y) {
      row.push_back(model.transition_weights(p, y));
    }
    trans.push_back(std::move(row));
  }
  return json{{"version", 1},
              {"label_set", model.label_set},
              {"feature_index", model.feature_index},
              {"state_weights", std::move(state)},
              {"transition_weights", std::move(trans)},
              {"l2_lambda", model.l2_lambda}};
}

CrfModel ModelFromJson(const json& j) {
  try {
    if (j.at("version").get<int>() != 1) {
      throw Error(ErrorCode::kMalformedInput, "unsupported model version");
    }
    const auto labels = j.at("label_set").get<std::vector<std::string>>();
    const auto index = j.at("feature_index").get<std::map<std::string, int>>();
    std::vector<std::string> names(index.size());
    std::vector<bool> seen(index.size(), false);
    for (const auto& [name, id] : index) {
      if (id < 0 || static_cast<size_t>(id) >= names.size() ||
          seen[static_cast<size_t>(id)]) {
        throw Error(ErrorCode::kMalformedInput, "feature index is not a bijection");
      }
      seen[static_cast<size_t>(id)] = true;
      names[static_cast<size_t>(id)] = name;
    }
    CrfModel model = MakeCrfModel(labels, names, j.at("l2_lambda").get<double>());
    const auto& state = j.at("state_weights");
    const auto& trans = j.at("transition_weights");
    if (state.size() != names.size() || trans.size() != labels.size()) {
      throw Error(ErrorCode::kMalformedInput, "weight matrix shape");
    }
    for (int f = 0; f < model.num_features(); ++f) {
      const auto& row = state.at(static_cast<size_t>(f));
      if (row.size() != labels.size()) {
        throw Error(ErrorCode::kMalformedInput, "weight matrix shape");
      }
      for (int y = 0; y < model.num_labels(); ++y) {
        model.state_weights(f, y) = row.at(static_cast<size_t>(y)).get<double>();
      }
    }
    for (int p = 0; p < model.num_labels(); ++p) {
      const auto& row = trans.at(static_cast<size_t>(p));
      if (row.size() != labels.size()) {
        throw Error(ErrorCode::kMalformedInput, "weight matrix shape");
      }
      for (int y = 0; y < model.num_labels(); ++y) {
        model.transition_weights(p, y) = row.at(static_cast<size_t>(y)).get<double>();
      }
    }
    model.CheckFinite();
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("model JSON: ") + e.what());
  }
}

}  // namespace preme
