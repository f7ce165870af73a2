#include "preme/subject_network.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "preme/error.h"
#include "preme/segmentation.h"
#include "preme/text.h"

namespace preme {

using nlohmann::json;

double EdgeWeight(const Embedding& u, const Embedding& v) {
  return std::max(0.0, Cosine(u, v));
}

SubjectNetwork BuildSubjectNetwork(std::vector<SubjectNode> nodes) {
  SubjectNetwork net;
  const int n = static_cast<int>(nodes.size());
  net.weights = Matrix(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double w = EdgeWeight(nodes[static_cast<size_t>(i)].embedding,
                                  nodes[static_cast<size_t>(j)].embedding);
      net.weights(i, j) = w;
      net.weights(j, i) = w;
    }
  }
  net.nodes = std::move(nodes);
  return net;
}

PageRankResult PageRank(const Matrix& weights, const PageRankOptions& options) {
  const int n = weights.rows();
  if (n < 1 || weights.cols() != n) {
    throw Error(ErrorCode::kInconsistentInputs, "PageRank needs a square, non-empty matrix");
  }
  std::vector<double> out_weight(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out_weight[static_cast<size_t>(i)] += weights(i, j);
  }
  const double inv_n = 1.0 / n;
  const double d = options.damping;
  PageRankResult result;
  std::vector<double> rank(static_cast<size_t>(n), inv_n), next(static_cast<size_t>(n));
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    double dangling = 0.0;
    for (int i = 0; i < n; ++i) {
      if (out_weight[static_cast<size_t>(i)] <= 0.0) dangling += rank[static_cast<size_t>(i)];
    }
    std::fill(next.begin(), next.end(), (1.0 - d) * inv_n + d * dangling * inv_n);
    for (int i = 0; i < n; ++i) {
      const double ow = out_weight[static_cast<size_t>(i)];
      if (ow <= 0.0) continue;
      const double share = d * rank[static_cast<size_t>(i)] / ow;
      for (int j = 0; j < n; ++j) next[static_cast<size_t>(j)] += share * weights(i, j);
    }
    double total = 0.0;
    for (double x : next) total += x;
    double change = 0.0;
    for (int i = 0; i < n; ++i) {
      next[static_cast<size_t>(i)] /= total;
      change += std::abs(next[static_cast<size_t>(i)] - rank[static_cast<size_t>(i)]);
    }
    rank.swap(next);
    result.iterations = iter;
    if (change < options.tol) {
      result.converged = true;
      break;
    }
  }
  if (!result.converged) {
    spdlog::warn("PageRank did not converge in {} iterations", options.max_iter);
  }
  result.scores = std::move(rank);
  return result;
}

SubjectSelection SelectSubject(const SubjectNetwork& network,
                               const PageRankOptions& options) {
  SubjectSelection sel;
  sel.pagerank = PageRank(network.weights, options);
  const auto& scores = sel.pagerank.scores;
  auto better = [&](int a, int b) {
    const double sa = scores[static_cast<size_t>(a)];
    const double sb = scores[static_cast<size_t>(b)];
    if (std::abs(sa - sb) > 1e-12) return sa > sb;
    const auto& na = network.nodes[static_cast<size_t>(a)];
    const auto& nb = network.nodes[static_cast<size_t>(b)];
    if (na.source_question_ids.size() != nb.source_question_ids.size()) {
      return na.source_question_ids.size() > nb.source_question_ids.size();
    }
    if (na.text.size() != nb.text.size()) return na.text.size() < nb.text.size();
    return na.text < nb.text;
  };
  for (int i = 1; i < network.size(); ++i) {
    if (better(i, sel.index)) sel.index = i;
  }
  return sel;
}

std::vector<int> FilterSimilarSubjects(const SubjectNetwork& network, int s_norm,
                                       double merge_threshold) {
  if (s_norm < 0 || s_norm >= network.size()) {
    throw Error(ErrorCode::kInconsistentInputs, "s_norm is not a network node");
  }
  std::vector<int> kept;
  const Embedding& center = network.nodes[static_cast<size_t>(s_norm)].embedding;
  for (int i = 0; i < network.size(); ++i) {
    if (i == s_norm ||
        EdgeWeight(network.nodes[static_cast<size_t>(i)].embedding, center) >=
            merge_threshold) {
      kept.push_back(i);
    }
  }
  return kept;
}

namespace {

std::set<std::string> Grams(const std::vector<std::string>& tokens, bool bigrams) {
  std::set<std::string> out;
  if (!bigrams) {
    out.insert(tokens.begin(), tokens.end());
    return out;
  }
  for (size_t i = 0; i + 1 < tokens.size(); ++i) {
    out.insert(tokens[i] + " " + tokens[i + 1]);
  }
  return out;
}

}  // namespace

double NgramJaccard(const std::string& a, const std::string& b) {
  const auto ta = MetricTokens(a);
  const auto tb = MetricTokens(b);
  const bool bigrams = ta.size() >= 2 && tb.size() >= 2;
  const auto ga = Grams(ta, bigrams);
  const auto gb = Grams(tb, bigrams);
  if (ga.empty() && gb.empty()) return 1.0;
  size_t inter = 0;
  for (const auto& g : ga) inter += gb.count(g);
  const size_t uni = ga.size() + gb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::string> DedupeNgrams(const std::vector<std::string>& texts,
                                      double jaccard_threshold) {
  std::vector<std::string> kept;
  for (const auto& t : texts) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](const std::string& k) {
      return NgramJaccard(k, t) >= jaccard_threshold;
    });
    if (!dup) kept.push_back(t);
  }
  return kept;
}

std::vector<AspectEntry> MapAspects(const std::vector<std::string>& merged_subjects,
                                    const std::vector<TaggedQuestion>& questions,
                                    double jaccard_threshold) {
  std::set<std::string> subjects;
  for (const auto& s : merged_subjects) subjects.insert(CaseFold(s));

  // Raw keys by first appearance, keyed on casefolded text.
  std::vector<std::string> raw_keys;
  std::map<std::string, std::vector<std::string>> raw_questions;
  std::vector<std::string> general;
  for (const auto& q : questions) {
    const auto qs = q.Subjects();
    const bool matches = std::any_of(qs.begin(), qs.end(), [&](const std::string& s) {
      return subjects.count(CaseFold(s)) > 0;
    });
    if (!matches) continue;
    const auto aspects = q.Aspects();
    if (aspects.empty()) {
      general.push_back(q.id);
      continue;
    }
    for (const auto& a : aspects) {
      const std::string key = CaseFold(a);
      auto [it, inserted] = raw_questions.try_emplace(key);
      if (inserted) raw_keys.push_back(a);
      if (std::find(it->second.begin(), it->second.end(), q.id) == it->second.end()) {
        it->second.push_back(q.id);
      }
    }
  }

  std::vector<AspectEntry> out;
  if (!general.empty()) out.push_back(AspectEntry{kGeneralAspect, general});
  const size_t first_aspect = out.size();
  for (const auto& key : raw_keys) {
    auto target = out.end();
    for (auto it = out.begin() + static_cast<long>(first_aspect); it != out.end(); ++it) {
      if (NgramJaccard(it->aspect, key) >= jaccard_threshold) {
        target = it;
        break;
      }
    }
    if (target == out.end()) {
      out.push_back(AspectEntry{key, {}});
      target = out.end() - 1;
    }
    for (const auto& id : raw_questions[CaseFold(key)]) {
      if (std::find(target->question_ids.begin(), target->question_ids.end(), id) ==
          target->question_ids.end()) {
        target->question_ids.push_back(id);
      }
    }
  }
  return out;
}

NormalizationResult NormalizeSegment(const std::string& segment_id,
                                     const std::vector<TaggedQuestion>& questions,
                                     EmbeddingProvider& embedder,
                                     const NormalizationConfig& config) {
  NormalizationResult result;
  result.segment_id = segment_id;

  std::vector<SubjectNode> nodes;
  std::map<std::string, size_t> by_key;
  for (const auto& q : questions) {
    for (const auto& s : q.Subjects()) {
      const std::string key = CaseFold(s);
      auto [it, inserted] = by_key.emplace(key, nodes.size());
      if (inserted) nodes.push_back(SubjectNode{s, {}, {}});
      auto& ids = nodes[it->second].source_question_ids;
      if (std::find(ids.begin(), ids.end(), q.id) == ids.end()) ids.push_back(q.id);
    }
  }
  if (nodes.empty()) return result;

  std::vector<std::string> texts;
  for (const auto& n : nodes) texts.push_back(n.text);
  auto vectors = CallWithRetries(config.retry, [&] { return embedder.Embed(texts); });
  if (vectors.size() != nodes.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding count mismatch for subjects");
  }
  const size_t dim = vectors[0].size();
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (vectors[i].size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "inconsistent subject embedding dimension");
    }
    nodes[i].embedding = std::move(vectors[i]);
  }

  const SubjectNetwork network = BuildSubjectNetwork(std::move(nodes));
  const SubjectSelection sel = SelectSubject(network, config.pagerank);
  result.s_norm = sel.index;
  result.pagerank_scores = sel.pagerank.scores;
  result.merged = FilterSimilarSubjects(network, sel.index, config.merge_threshold);
  std::vector<std::string> merged_texts;
  for (int i : result.merged) merged_texts.push_back(network.nodes[static_cast<size_t>(i)].text);
  result.aspects = MapAspects(merged_texts, questions, config.jaccard_threshold);
  result.nodes = network.nodes;
  return result;
}

json NormalizationToJson(const NormalizationResult& result) {
  json nodes = json::array();
  for (size_t i = 0; i < result.nodes.size(); ++i) {
    const auto& n = result.nodes[i];
    nodes.push_back({{"subject", n.text},
                     {"question_ids", n.source_question_ids},
                     {"pagerank", result.pagerank_scores.at(i)}});
  }
  json aspects = json::array();
  for (const auto& a : result.aspects) {
    aspects.push_back({{"aspect", a.aspect}, {"question_ids", a.question_ids}});
  }
  return json{{"segment_id", result.segment_id},
              {"s_norm", result.s_norm},
              {"merged", result.merged},
              {"nodes", std::move(nodes)},
              {"aspects", std::move(aspects)}};
}

NormalizationResult NormalizationFromJson(const json& j) {
  try {
    NormalizationResult r;
    r.segment_id = j.at("segment_id").get<std::string>();
    r.s_norm = j.at("s_norm").get<int>();
    r.merged = j.at("merged").get<std::vector<int>>();
    for (const auto& n : j.at("nodes")) {
      r.nodes.push_back(SubjectNode{n.at("subject").get<std::string>(), {},
                                    n.at("question_ids").get<std::vector<std::string>>()});
      r.pagerank_scores.push_back(n.at("pagerank").get<double>());
    }
    for (const auto& a : j.at("aspects")) {
      r.aspects.push_back(AspectEntry{a.at("aspect").get<std::string>(),
                                      a.at("question_ids").get<std::vector<std::string>>()});
    }
    if (r.s_norm >= static_cast<int>(r.nodes.size())) {
      throw Error(ErrorCode::kMalformedInput, "s_norm out of range");
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("normalization JSON: ") + e.what());
  }
}

}  // namespace preme
