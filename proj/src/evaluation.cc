#include "preme/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

#include "preme/error.h"
#include "preme/labels.h"
#include "preme/segmentation.h"
#include "preme/text.h"

namespace preme {

using nlohmann::json;

namespace {

std::map<std::string, int> Counts(const std::vector<std::string>& tokens) {
  std::map<std::string, int> counts;
  for (const auto& t : tokens) ++counts[t];
  return counts;
}

double F1FromTokens(const std::vector<std::string>& cand,
                    const std::vector<std::string>& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  const auto c = Counts(cand);
  const auto r = Counts(ref);
  int overlap = 0;
  for (const auto& [tok, n] : c) {
    auto it = r.find(tok);
    if (it != r.end()) overlap += std::min(n, it->second);
  }
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(cand.size());
  const double rc = static_cast<double>(overlap) / static_cast<double>(ref.size());
  return 2.0 * p * rc / (p + rc);
}

std::map<std::vector<std::string>, int> NgramCounts(const std::vector<std::string>& tokens,
                                                    size_t n) {
  std::map<std::vector<std::string>, int> counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<long>(i),
                                      tokens.begin() + static_cast<long>(i + n))];
  }
  return counts;
}

}  // namespace

double Rouge1F1(const std::string& candidate, const std::string& reference) {
  return F1FromTokens(MetricTokens(candidate), MetricTokens(reference));
}

double Bleu4(const std::string& candidate, const std::string& reference) {
  const auto cand = MetricTokens(candidate);
  const auto ref = MetricTokens(reference);
  if (cand.empty() || ref.empty()) return 0.0;
  double log_sum = 0.0;
  for (size_t n = 1; n <= 4; ++n) {
    const auto c = NgramCounts(cand, n);
    const auto r = NgramCounts(ref, n);
    int matches = 0;
    int total = 0;
    for (const auto& [gram, count] : c) {
      total += count;
      auto it = r.find(gram);
      if (it != r.end()) matches += std::min(count, it->second);
    }
    const double p = matches == 0 ? 1.0 / (total + 1.0)
                                  : static_cast<double>(matches) / total;
    log_sum += std::log(p);
  }
  const double c_len = static_cast<double>(cand.size());
  const double r_len = static_cast<double>(ref.size());
  const double bp = c_len > r_len ? 1.0 : std::exp(1.0 - r_len / c_len);
  return std::clamp(bp * std::exp(log_sum / 4.0), 0.0, 1.0);
}

std::vector<TurnRange> BaselineLocate(const std::string& question,
                                      const Transcript& transcript, int k) {
  if (k < 1) throw Error(ErrorCode::kConfiguration, "locator k must be at least 1");
  const int n = transcript.size();
  if (n == 0) return {};
  std::vector<std::set<std::string>> turn_tokens(static_cast<size_t>(n));
  std::map<std::string, int> df;
  for (int t = 0; t < n; ++t) {
    for (auto& tok : MetricTokens(transcript.turns[static_cast<size_t>(t)].text)) {
      turn_tokens[static_cast<size_t>(t)].insert(std::move(tok));
    }
    for (const auto& tok : turn_tokens[static_cast<size_t>(t)]) ++df[tok];
  }
  const auto q_tokens = MetricTokens(question);
  const std::set<std::string> q_set(q_tokens.begin(), q_tokens.end());
  std::vector<std::pair<double, int>> scored;
  for (int t = 0; t < n; ++t) {
    double score = 0.0;
    for (const auto& tok : q_set) {
      if (turn_tokens[static_cast<size_t>(t)].count(tok) > 0) {
        score += std::log(static_cast<double>(n) / df[tok]);
      }
    }
    scored.emplace_back(score, t);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<TurnRange> ranges;
  for (int i = 0; i < std::min(k, n); ++i) {
    const int t = scored[static_cast<size_t>(i)].second;
    ranges.push_back(TurnRange{std::max(0, t - 1), std::min(n, t + 2)});
  }
  std::sort(ranges.begin(), ranges.end());
  std::vector<TurnRange> merged;
  for (const auto& r : ranges) {
    if (!merged.empty() && r.start < merged.back().end) {
      merged.back().end = std::max(merged.back().end, r.end);
    } else {
      merged.push_back(r);
    }
  }
  return merged;
}

BaselineLocator::BaselineLocator(int k) : k_(k) {
  if (k < 1) throw Error(ErrorCode::kConfiguration, "locator k must be at least 1");
}

std::vector<TurnRange> BaselineLocator::Locate(const std::string& question,
                                               const Transcript& transcript) {
  return BaselineLocate(question, transcript, k_);
}

BaselineQa::BaselineQa(int window_turns) : window_turns_(window_turns) {
  if (window_turns < 1) throw Error(ErrorCode::kConfiguration, "QA window must be positive");
}

QaAnswer BaselineQa::Answer(const std::string& question, const std::string& context) {
  std::vector<std::string> lines;
  std::istringstream in(context);
  for (std::string line; std::getline(in, line);) {
    if (!Trim(line).empty()) lines.push_back(line);
  }
  const auto q = ContentTokens(question);
  QaAnswer best{"", 0.0};
  if (lines.empty() || q.empty()) return best;
  const size_t w = std::min(lines.size(), static_cast<size_t>(window_turns_));
  for (size_t start = 0; start + w <= lines.size(); ++start) {
    std::string window;
    for (size_t i = start; i < start + w; ++i) {
      if (i > start) window += '\n';
      window += lines[i];
    }
    const double f = F1FromTokens(q, ContentTokens(window));
    if (f > best.confidence || best.answer.empty()) best = QaAnswer{window, f};
  }
  return best;
}

std::string TranscriptContext(const Transcript& transcript) {
  std::string out;
  for (const auto& turn : transcript.turns) {
    if (!out.empty()) out += '\n';
    out += turn.text;
  }
  return out;
}

CoverageReport Coverage(const Questionnaire& questionnaire, const Transcript& transcript,
                        LocatorProvider& locator, const RetryPolicy& retry) {
  CoverageReport report;
  report.meeting_id = questionnaire.meeting_id;
  report.total_turns = transcript.size();
  for (const auto& [id, rec] : questionnaire.questions) {
    auto ranges = CallWithRetries(retry, [&] { return locator.Locate(rec.text, transcript); });
    auto& kept = report.per_question_spans[id];
    for (const auto& r : ranges) {
      const TurnRange clipped{std::max(0, r.start), std::min(report.total_turns, r.end)};
      if (clipped.start >= clipped.end) continue;
      kept.push_back(clipped);
      for (int t = clipped.start; t < clipped.end; ++t) report.covered_turns.insert(t);
    }
  }
  report.coverage = report.total_turns == 0
                        ? 0.0
                        : static_cast<double>(report.covered_turns.size()) /
                              static_cast<double>(report.total_turns);
  return report;
}

double FractionAtLeast(const std::vector<double>& values, double threshold) {
  if (values.empty()) return 0.0;
  const auto n = std::count_if(values.begin(), values.end(),
                               [&](double v) { return v >= threshold; });
  return static_cast<double>(n) / static_cast<double>(values.size());
}

AnswerabilityReport Answerability(
    const std::vector<std::pair<std::string, std::string>>& questions,
    const Transcript& transcript, QaProvider& qa, const std::vector<double>& thresholds,
    const RetryPolicy& retry) {
  AnswerabilityReport report;
  const std::string context = TranscriptContext(transcript);
  std::vector<double> values;
  for (const auto& [id, text] : questions) {
    const QaAnswer a = CallWithRetries(retry, [&] { return qa.Answer(text, context); });
    if (!std::isfinite(a.confidence)) {
      throw Error(ErrorCode::kMalformedInput, "QA confidence for " + id + " is not finite");
    }
    const double c = std::clamp(a.confidence, 0.0, 1.0);
    report.per_question_confidence[id] = c;
    values.push_back(c);
  }
  for (double t : thresholds) report.fraction_ge[t] = FractionAtLeast(values, t);
  return report;
}

std::string_view MatchMetricName(MatchMetric metric) {
  switch (metric) {
    case MatchMetric::kEmbeddingCosine: return "EmbeddingCosine";
    case MatchMetric::kRouge1F1: return "Rouge1F1";
    case MatchMetric::kBleu4: return "Bleu4";
  }
  return "Rouge1F1";
}

std::vector<double> DefaultMatchThresholds() {
  std::vector<double> t;
  for (int i = 10; i >= 0; --i) t.push_back(i / 10.0);
  return t;
}

std::map<double, double> CoveredFractions(const std::vector<double>& best_similarity,
                                          const std::vector<double>& thresholds) {
  std::map<double, double> out;
  for (double t : thresholds) {
    const auto n = std::count_if(best_similarity.begin(), best_similarity.end(),
                                 [&](double s) { return s >= t - 1e-12; });
    out[t] = best_similarity.empty()
                 ? 0.0
                 : static_cast<double>(n) / static_cast<double>(best_similarity.size());
  }
  return out;
}

MatchReport GoldMatch(const std::vector<std::string>& generated,
                      const std::vector<std::string>& gold, MatchMetric metric,
                      const std::vector<double>& thresholds, EmbeddingProvider* embedder) {
  if (gold.empty()) throw Error(ErrorCode::kEmptyDataset, "no gold questions");
  MatchReport report;
  report.metric = metric;
  report.thresholds = thresholds;
  std::vector<Embedding> gen_vecs;
  std::vector<Embedding> gold_vecs;
  if (metric == MatchMetric::kEmbeddingCosine) {
    if (embedder == nullptr) {
      throw Error(ErrorCode::kConfiguration, "embedding cosine needs an embedding provider");
    }
    if (!generated.empty()) gen_vecs = embedder->Embed(generated);
    gold_vecs = embedder->Embed(gold);
    if (gen_vecs.size() != generated.size() || gold_vecs.size() != gold.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "embedding count does not match input");
    }
  }
  for (size_t g = 0; g < gold.size(); ++g) {
    double best = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < generated.size(); ++i) {
      double s = 0.0;
      switch (metric) {
        case MatchMetric::kEmbeddingCosine: s = Cosine(gen_vecs[i], gold_vecs[g]); break;
        case MatchMetric::kRouge1F1: s = Rouge1F1(generated[i], gold[g]); break;
        case MatchMetric::kBleu4: s = Bleu4(generated[i], gold[g]); break;
      }
      best = std::max(best, s);
    }
    report.best_similarity.push_back(best);
  }
  report.covered_fraction_at = CoveredFractions(report.best_similarity, thresholds);
  return report;
}

namespace {

std::set<std::string> TokenSet(const AgreementValue& value) {
  std::set<std::string> out;
  for (const auto& span : value) {
    for (auto& t : MetricTokens(span)) out.insert(std::move(t));
  }
  return out;
}

AgreementValue Normalized(const AgreementValue& value) {
  AgreementValue out;
  for (const auto& span : value) out.push_back(Join(MetricTokens(span), " "));
  return out;
}

}  // namespace

double AgreementDelta(const AgreementValue& a, const AgreementValue& b,
                      AgreementDistance distance) {
  if (distance == AgreementDistance::kHard) return Normalized(a) == Normalized(b) ? 0.0 : 1.0;
  const auto sa = TokenSet(a);
  const auto sb = TokenSet(b);
  if (sa.empty() && sb.empty()) return 0.0;
  for (const auto& t : sa) {
    if (sb.count(t) > 0) return 0.0;
  }
  return 1.0;
}

double KrippendorffAlpha(const AgreementItems& items, AgreementDistance distance) {
  std::vector<std::vector<const AgreementValue*>> pairable;
  for (const auto& item : items) {
    std::vector<const AgreementValue*> values;
    for (const auto& v : item) {
      if (v) values.push_back(&*v);
    }
    if (values.size() >= 2) pairable.push_back(std::move(values));
  }
  if (pairable.size() < 2) {
    throw Error(ErrorCode::kInsufficientOverlap,
                "need at least 2 items annotated by at least 2 annotators");
  }
  std::vector<const AgreementValue*> all;
  double observed = 0.0;
  for (const auto& values : pairable) {
    const double m = static_cast<double>(values.size());
    double within = 0.0;
    for (size_t i = 0; i < values.size(); ++i) {
      for (size_t j = 0; j < values.size(); ++j) {
        if (i != j) within += AgreementDelta(*values[i], *values[j], distance);
      }
    }
    observed += within / (m - 1.0);
    all.insert(all.end(), values.begin(), values.end());
  }
  const double n = static_cast<double>(all.size());
  observed /= n;
  double expected = 0.0;
  for (size_t i = 0; i < all.size(); ++i) {
    for (size_t j = 0; j < all.size(); ++j) {
      if (i != j) expected += AgreementDelta(*all[i], *all[j], distance);
    }
  }
  expected /= n * (n - 1.0);
  if (expected == 0.0) return 1.0;
  return 1.0 - observed / expected;
}

AgreementReport Agreement(const std::vector<AnnotationSet>& annotators) {
  if (annotators.size() < 2) {
    throw Error(ErrorCode::kInsufficientOverlap, "need at least 2 annotators");
  }
  size_t n_items = 0;
  for (const auto& a : annotators) n_items = std::max(n_items, a.questions.size());
  AgreementItems subjects(n_items);
  AgreementItems aspects(n_items);
  for (size_t q = 0; q < n_items; ++q) {
    const std::vector<std::string>* tokens = nullptr;
    for (const auto& a : annotators) {
      if (q >= a.questions.size()) {
        subjects[q].push_back(std::nullopt);
        aspects[q].push_back(std::nullopt);
        continue;
      }
      const AnnotatedQuestion& aq = a.questions[q];
      if (tokens != nullptr && *tokens != aq.tokens) {
        throw Error(ErrorCode::kInconsistentInputs,
                    "annotators disagree on the tokens of question " + std::to_string(q));
      }
      tokens = &aq.tokens;
      const SpanSet spans = SpansFromLabels(aq.labels);
      AgreementValue subj;
      AgreementValue asp;
      for (const auto& s : spans.subjects) subj.push_back(SpanText(aq.tokens, s));
      for (const auto& s : spans.aspects) asp.push_back(SpanText(aq.tokens, s));
      subjects[q].push_back(std::move(subj));
      aspects[q].push_back(std::move(asp));
    }
  }
  AgreementReport r;
  r.alpha_subject_hard = KrippendorffAlpha(subjects, AgreementDistance::kHard);
  r.alpha_aspect_hard = KrippendorffAlpha(aspects, AgreementDistance::kHard);
  r.alpha_subject_soft = KrippendorffAlpha(subjects, AgreementDistance::kSoft);
  r.alpha_aspect_soft = KrippendorffAlpha(aspects, AgreementDistance::kSoft);
  return r;
}

namespace {

std::string ThresholdKey(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", t);
  return buf;
}

json RangesJson(const std::vector<TurnRange>& ranges) {
  json out = json::array();
  for (const auto& r : ranges) out.push_back({r.start, r.end});
  return out;
}

}  // namespace

json CoverageToJson(const CoverageReport& report) {
  json spans = json::object();
  for (const auto& [id, ranges] : report.per_question_spans) spans[id] = RangesJson(ranges);
  return json{{"meeting_id", report.meeting_id},
              {"total_turns", report.total_turns},
              {"covered_turns", report.covered_turns},
              {"coverage", report.coverage},
              {"per_question_spans", std::move(spans)}};
}

json AnswerabilityToJson(const AnswerabilityReport& report) {
  json fractions = json::object();
  for (const auto& [t, f] : report.fraction_ge) fractions[ThresholdKey(t)] = f;
  return json{{"per_question_confidence", report.per_question_confidence},
              {"fraction_ge", std::move(fractions)}};
}

json MatchToJson(const MatchReport& report) {
  json covered = json::object();
  for (const auto& [t, f] : report.covered_fraction_at) covered[ThresholdKey(t)] = f;
  json best = json::array();
  for (double s : report.best_similarity) {
    if (std::isfinite(s)) {
      best.push_back(s);
    } else {
      best.push_back(nullptr);
    }
  }
  return json{{"metric", std::string(MatchMetricName(report.metric))},
              {"thresholds", report.thresholds},
              {"covered_fraction_at", std::move(covered)},
              {"best_similarity", std::move(best)}};
}

json AgreementToJson(const AgreementReport& report) {
  return json{{"alpha_subject_hard", report.alpha_subject_hard},
              {"alpha_aspect_hard", report.alpha_aspect_hard},
              {"alpha_subject_soft", report.alpha_subject_soft},
              {"alpha_aspect_soft", report.alpha_aspect_soft}};
}

std::string CoverageTable(const std::vector<MeetingSummary>& meetings) {
  struct Row {
    std::string name;
    int count = 0;
    double turns = 0.0;
    double questions = 0.0;
    double coverage = 0.0;
  };
  std::map<std::string, Row> rows;
  Row all{"All"};
  for (const auto& m : meetings) {
    const std::string name(CategoryName(m.category));
    Row& r = rows[name];
    r.name = name;
    for (Row* row : {&r, &all}) {
      row->count += 1;
      row->turns += m.turns;
      row->questions += m.questions;
      row->coverage += m.coverage;
    }
  }
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %10s %12s %12s %14s\n", "", "#Meetings",
                "Avg # Turns", "Avg # Qs", "Coverage (%)");
  out += buf;
  auto emit = [&](const Row& r) {
    const double n = r.count == 0 ? 1.0 : r.count;
    std::snprintf(buf, sizeof(buf), "%-10s %10d %12.0f %12.0f %13.2f%%\n", r.name.c_str(),
                  r.count, r.turns / n, r.questions / n, 100.0 * r.coverage / n);
    out += buf;
  };
  for (const auto& [_, r] : rows) emit(r);
  emit(all);
  return out;
}

}  // namespace preme
