#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "preme/providers.h"
#include "preme/questionnaire.h"
#include "preme/transcript.h"

namespace preme {

// Unigram F1 over casefolded, punctuation-free tokens; 0 when either side is empty.
double Rouge1F1(const std::string& candidate, const std::string& reference);

// Sentence BLEU-4. Orders with no clipped match use (m + 1) / (c + 1) where c
// is the number of candidate n-grams of that order; the rest use m / c.
// Brevity penalty exp(1 - r/c) when the candidate is not longer. 0 when either
// side is empty.
double Bleu4(const std::string& candidate, const std::string& reference);

// IDF-weighted overlap locator: idf(w) = log(N / df(w)) with turns as
// documents. The top k turns (ties to the lower index) are widened to
// [t-1, t+2), clipped, merged when overlapping and returned sorted.
std::vector<TurnRange> BaselineLocate(const std::string& question,
                                      const Transcript& transcript, int k);

class BaselineLocator : public LocatorProvider {
 public:
  explicit BaselineLocator(int k = 1);
  std::vector<TurnRange> Locate(const std::string& question,
                                const Transcript& transcript) override;

 private:
  int k_;
};

// Context lines are grouped into sliding windows of `window_turns` lines; the
// confidence is the best ROUGE-1 F1 between the question's content words and
// a window's content words, and the answer is that window.
class BaselineQa : public QaProvider {
 public:
  explicit BaselineQa(int window_turns = 3);
  QaAnswer Answer(const std::string& question, const std::string& context) override;

 private:
  int window_turns_;
};

// Turn texts one per line, as handed to QA providers.
std::string TranscriptContext(const Transcript& transcript);

struct CoverageReport {
  std::string meeting_id;
  std::set<int> covered_turns;
  int total_turns = 0;
  double coverage = 0.0;
  std::map<std::string, std::vector<TurnRange>> per_question_spans;
};

// Union of located ranges over every question of the questionnaire, clipped
// to the transcript.
CoverageReport Coverage(const Questionnaire& questionnaire, const Transcript& transcript,
                        LocatorProvider& locator, const RetryPolicy& retry = {});

struct AnswerabilityReport {
  std::map<std::string, double> per_question_confidence;
  std::map<double, double> fraction_ge;
};

inline const std::vector<double> kDefaultConfidenceThresholds = {0.5, 0.7};

double FractionAtLeast(const std::vector<double>& values, double threshold);

AnswerabilityReport Answerability(
    const std::vector<std::pair<std::string, std::string>>& questions,
    const Transcript& transcript, QaProvider& qa,
    const std::vector<double>& thresholds = kDefaultConfidenceThresholds,
    const RetryPolicy& retry = {});

enum class MatchMetric { kEmbeddingCosine, kRouge1F1, kBleu4 };

std::string_view MatchMetricName(MatchMetric metric);

struct MatchReport {
  MatchMetric metric = MatchMetric::kRouge1F1;
  std::vector<double> thresholds;
  std::map<double, double> covered_fraction_at;
  std::vector<double> best_similarity;  // per gold question; -inf for an empty pool
};

std::vector<double> DefaultMatchThresholds();  // 1.0, 0.9, ..., 0.0

// A gold question is covered at t when its best similarity is >= t (with a
// 1e-12 slack). Embedding cosine needs `embedder`. Throws EmptyDataset for an
// empty gold list.
MatchReport GoldMatch(const std::vector<std::string>& generated,
                      const std::vector<std::string>& gold, MatchMetric metric,
                      const std::vector<double>& thresholds = DefaultMatchThresholds(),
                      EmbeddingProvider* embedder = nullptr);

// Covered fraction given precomputed best similarities.
std::map<double, double> CoveredFractions(const std::vector<double>& best_similarity,
                                          const std::vector<double>& thresholds);

// One value per annotator per item; a value is the list of extracted span
// texts and nullopt marks a missing annotation.
using AgreementValue = std::vector<std::string>;
using AgreementItems = std::vector<std::vector<std::optional<AgreementValue>>>;

enum class AgreementDistance { kHard, kSoft };

// Hard: 0 iff the normalized span lists are equal. Soft: 0 iff the token sets
// of the two values intersect, or both values are empty.
double AgreementDelta(const AgreementValue& a, const AgreementValue& b,
                      AgreementDistance distance);

// alpha = 1 - D_o / D_e from the coincidence matrix of pairable values.
// Throws InsufficientOverlap unless at least 2 items carry 2 or more values.
// Returns 1 when every pairable value is identical (D_e = 0).
double KrippendorffAlpha(const AgreementItems& items, AgreementDistance distance);

struct AgreementReport {
  double alpha_subject_hard = 0.0;
  double alpha_aspect_hard = 0.0;
  double alpha_subject_soft = 0.0;
  double alpha_aspect_soft = 0.0;
};

// Annotators are aligned by question index; token sequences must agree.
AgreementReport Agreement(const std::vector<AnnotationSet>& annotators);

nlohmann::json CoverageToJson(const CoverageReport& report);
nlohmann::json AnswerabilityToJson(const AnswerabilityReport& report);
nlohmann::json MatchToJson(const MatchReport& report);
nlohmann::json AgreementToJson(const AgreementReport& report);

struct MeetingSummary {
  std::string meeting_id;
  Category category = Category::kOther;
  int turns = 0;
  int questions = 0;
  double coverage = 0.0;
};

// Category | #Meetings | Average # Turns | Average # Questions | Coverage (%),
// one row per category present plus an "All" row; averages are per meeting.
std::string CoverageTable(const std::vector<MeetingSummary>& meetings);

}  // namespace preme
