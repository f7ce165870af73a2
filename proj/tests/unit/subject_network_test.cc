#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.h"
#include "preme/subject_network.h"
#include "support.h"
#include "tagged_fixture.h"

using namespace preme;
using namespace preme::testing;

namespace {

Embedding Normalized(Embedding v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  for (double& x : v) x /= std::sqrt(n);
  return v;
}

SubjectNode Node(const std::string& text, Embedding e, int sources = 1) {
  SubjectNode n{text, std::move(e), {}};
  for (int i = 0; i < sources; ++i) n.source_question_ids.push_back(text + std::to_string(i));
  return n;
}

std::vector<std::vector<double>> Dense(const Matrix& m) {
  std::vector<std::vector<double>> out(static_cast<size_t>(m.rows()), std::vector<double>(static_cast<size_t>(m.cols())));
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) out[static_cast<size_t>(i)][static_cast<size_t>(j)] = m(i, j);
  }
  return out;
}

}  // namespace

TEST_CASE("edge weights") {
  CHECK(EdgeWeight({1, 0}, {1, 0}) == doctest::Approx(1.0));
  CHECK(EdgeWeight({1, 0}, {0, 1}) == 0.0);
  CHECK(EdgeWeight({1, 0}, {-1, 0}) == 0.0);
  CHECK(EdgeWeight({0, 0}, {1, 0}) == 0.0);
  CHECK_THROWS_AS(EdgeWeight({1}, {1, 0}), Error);
}

TEST_CASE("network is symmetric with zero diagonal") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<SubjectNode> nodes;
  for (int i = 0; i < 7; ++i) nodes.push_back(Node("s" + std::to_string(i), {g(rng), g(rng), g(rng)}));
  const auto net = BuildSubjectNetwork(nodes);
  for (int i = 0; i < 7; ++i) {
    CHECK(net.weights(i, i) == 0.0);
    for (int j = 0; j < 7; ++j) {
      CHECK(net.weights(i, j) == net.weights(j, i));
      CHECK(net.weights(i, j) >= 0.0);
      CHECK(net.weights(i, j) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("pagerank small cases") {
  CHECK(PageRank(Matrix(1, 1)).scores == std::vector<double>{1.0});
  Matrix eq(3, 3, 0.5);
  for (int i = 0; i < 3; ++i) eq(i, i) = 0.0;
  for (double s : PageRank(eq).scores) CHECK(s == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Matrix w(3, 3);
  w(0, 1) = w(1, 0) = 0.9;
  w(0, 2) = w(2, 0) = 0.8;
  w(1, 2) = w(2, 1) = 0.1;
  const auto pr = PageRank(w);
  const auto expected = oracle::PageRankPull(Dense(w), 0.85, 2000);
  for (size_t i = 0; i < 3; ++i) CHECK(std::abs(pr.scores[i] - expected[i]) < 1e-8);
  CHECK(std::max_element(pr.scores.begin(), pr.scores.end()) - pr.scores.begin() == 0);
  CHECK(pr.converged);
}

TEST_CASE("pagerank agrees with the linear solve on random graphs") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 15);
    Matrix w(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) w(i, j) = w(j, i) = u(rng) < 0.3 ? 0.0 : u(rng);
    }
    const auto pr = PageRank(w);
    const auto exact = oracle::PageRankLinear(Dense(w), 0.85);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(pr.scores[static_cast<size_t>(i)] - exact[static_cast<size_t>(i)]) < 1e-8);
      CHECK(pr.scores[static_cast<size_t>(i)] > 0.0);
      total += pr.scores[static_cast<size_t>(i)];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("pagerank stops at max_iter") {
  Matrix w(3, 3);
  w(0, 1) = w(1, 0) = 1.0;
  PageRankOptions o;
  o.max_iter = 1;
  o.tol = 0.0;
  const auto pr = PageRank(w, o);
  CHECK_FALSE(pr.converged);
  CHECK(pr.iterations == 1);
}

TEST_CASE("selection tie rules") {
  const Embedding e = {1, 0};
  {
    const auto net = BuildSubjectNetwork({Node("alpha", e, 1), Node("beta", e, 3)});
    CHECK(SelectSubject(net).index == 1);
  }
  {
    // All-zero weights: uniform scores; equal sources; shorter text wins.
    const auto net = BuildSubjectNetwork({Node("budget plan", {1, 0}), Node("cost", {0, 1}), Node("zzzzz", {0, 0})});
    CHECK(SelectSubject(net).index == 1);
  }
  {
    const auto net = BuildSubjectNetwork({Node("beta", {1, 0}), Node("alfa", {0, 1})});
    CHECK(SelectSubject(net).index == 1);
  }
}

TEST_CASE("the most central education subject is selected") {
  // Axes: education, school, statute, age, youth, committee.
  const std::map<std::string, Embedding> table = {
      {"Education", Normalized({1.0, 0.35, 0.3, 0.3, 0.25, 0.2})},
      {"schools", Normalized({0.7, 1.0, 0.0, 0.0, 0.2, 0.0})},
      {"statutory education", Normalized({0.8, 0.0, 1.0, 0.0, 0.0, 0.1})},
      {"post 12 education", Normalized({0.8, 0.1, 0.0, 1.0, 0.2, 0.0})},
      {"young people who are leaving school", Normalized({0.4, 0.6, 0.0, 0.2, 1.0, 0.0})},
  };
  TableEmbeddingProvider embedder(table);
  std::vector<TaggedQuestion> qs = {
      MakeTagged("q0", "schools", {"funding"}),
      MakeTagged("q1", "statutory education", {"age"}),
      MakeTagged("q2", "Education", {"role"}),
      MakeTagged("q3", "post 12 education", {"options"}),
      MakeTagged("q4", "young people who are leaving school", {"support"}),
  };
  const auto r = NormalizeSegment("seg-01", qs, embedder);
  REQUIRE(r.has_subject());
  CHECK(r.subject() == "Education");
  const auto expected = oracle::PageRankLinear(
      Dense(BuildSubjectNetwork(r.nodes).weights), 0.85);
  const auto best = std::max_element(expected.begin(), expected.end()) - expected.begin();
  CHECK(r.nodes[static_cast<size_t>(best)].text == "Education");
}

TEST_CASE("merging similar subjects keeps their aspects") {
  const std::map<std::string, Embedding> table = {
      {"education", Normalized({1.0, 0.3, 0.3, 0.0})},
      {"school setting", Normalized({0.9, 0.6, 0.0, 0.0})},
      {"Education and Skills Committee", Normalized({0.9, 0.0, 0.6, 0.0})},
      {"budget", Normalized({0.1, 0.0, 0.0, 1.0})},
  };
  const std::vector<TaggedQuestion> qs = {
      MakeTagged("q0", "education", {"role"}),
      MakeTagged("q1", "school setting", {"challenges"}),
      MakeTagged("q2", "Education and Skills Committee", {"members"}),
      MakeTagged("q3", "budget", {"size"}),
      MakeTagged("q4", "education"),
  };
  TableEmbeddingProvider embedder(table);
  NormalizationConfig config;
  const auto merged = NormalizeSegment("seg-01", qs, embedder, config);
  REQUIRE(merged.subject() == "education");
  std::vector<std::string> keys;
  for (const auto& a : merged.aspects) keys.push_back(a.aspect);
  CHECK(keys == std::vector<std::string>{kGeneralAspect, "role", "challenges", "members"});

  config.merge_threshold = 1.0 + 1e-9;
  const auto alone = NormalizeSegment("seg-01", qs, embedder, config);
  CHECK(alone.merged == std::vector<int>{alone.s_norm});
  CHECK(alone.aspects.size() == 2);

  config.merge_threshold = 0.0;
  const auto all = NormalizeSegment("seg-01", qs, embedder, config);
  CHECK(all.merged.size() == 4);
}

TEST_CASE("ngram jaccard and dedupe") {
  CHECK(NgramJaccard("the budget", "the budget") == 1.0);
  // Bigram sets {main frustrations, frustrations people, people have} and
  // {frustrations people, people have}: 2 shared of 3.
  CHECK(NgramJaccard("main frustrations people have", "frustrations people have") ==
        doctest::Approx(2.0 / 3));
  CHECK(NgramJaccard("budget", "the budget") == doctest::Approx(0.5));
  CHECK(NgramJaccard("", "") == 1.0);
  using V = std::vector<std::string>;
  CHECK(DedupeNgrams({"the budget", "the budget"}, 0.5) == V{"the budget"});
  CHECK(DedupeNgrams({"arrow symbol", "color scheme"}, 0.5) == V{"arrow symbol", "color scheme"});
  CHECK(DedupeNgrams({"main frustrations people have", "frustrations people have"}, 0.5) ==
        V{"main frustrations people have"});
}

TEST_CASE("aspect mapping") {
  const std::vector<TaggedQuestion> qs = {
      MakeTagged("q0", "Remote", {"arrow symbol"}),
      MakeTagged("q1", "remote", {"the arrow symbol"}),
      MakeTagged("q2", "remote"),
      MakeTagged("q3", "battery", {"price"}),
      MakeTagged("q4", "remote", {"colour", "shape"}),
  };
  const auto aspects = MapAspects({"remote"}, qs, 0.5);
  REQUIRE(aspects.size() == 4);
  CHECK(aspects[0].aspect == kGeneralAspect);
  CHECK(aspects[0].question_ids == std::vector<std::string>{"q2"});
  CHECK(aspects[1].aspect == "arrow symbol");
  CHECK(aspects[1].question_ids == std::vector<std::string>{"q0", "q1"});
  CHECK(aspects[2].aspect == "colour");
  CHECK(aspects[3].question_ids == std::vector<std::string>{"q4"});
}

TEST_CASE("segment without subjects") {
  TableEmbeddingProvider embedder({});
  const auto r = NormalizeSegment("seg-01", {MakeTagged("q0", "")}, embedder);
  CHECK_FALSE(r.has_subject());
  CHECK(embedder.calls == 0);
}

TEST_CASE("normalization json round trip") {
  const std::map<std::string, Embedding> table = {{"a", {1, 0}}, {"b", {0.8, 0.6}}};
  TableEmbeddingProvider embedder(table);
  const auto r = NormalizeSegment("seg-01", {MakeTagged("q0", "a", {"x"}), MakeTagged("q1", "b")}, embedder);
  const auto back = NormalizationFromJson(NormalizationToJson(r));
  CHECK(back.segment_id == r.segment_id);
  CHECK(back.s_norm == r.s_norm);
  CHECK(back.merged == r.merged);
  CHECK(back.pagerank_scores == r.pagerank_scores);
  REQUIRE(back.aspects.size() == r.aspects.size());
  CHECK(back.subject() == r.subject());
}
