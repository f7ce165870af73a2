#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.h"
#include "preme/crf.h"
#include "preme/error.h"
#include "preme/lbfgs.h"

using namespace preme;

namespace {

CrfModel RandomModel(std::mt19937_64& rng, int labels, int features, double scale) {
  std::vector<std::string> names;
  for (int f = 0; f < features; ++f) names.push_back("f" + std::to_string(f));
  std::vector<std::string> label_set;
  for (int l = 0; l < labels; ++l) label_set.push_back("L" + std::to_string(l));
  CrfModel m = MakeCrfModel(label_set, names, 0.0);
  std::normal_distribution<double> w(0.0, scale);
  auto theta = m.Parameters();
  for (double& x : theta) x = w(rng);
  m.SetParameters(theta);
  return m;
}

FeatureSequence RandomSequence(std::mt19937_64& rng, int length, int features) {
  FeatureSequence seq(static_cast<size_t>(length));
  for (auto& pos : seq) {
    const int k = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < k; ++i) pos.push_back(static_cast<int>(rng() % static_cast<uint64_t>(features)));
  }
  return seq;
}

}  // namespace

TEST_CASE("zero weights give uniform marginals") {
  CrfModel m = MakeCrfModel({"a", "b", "c", "d", "e", "f"}, {"x"}, 0.0);
  const FeatureSequence seq = {{0}, {0}, {}, {0}};
  const auto fb = ForwardBackward(m, seq);
  CHECK(fb.log_partition == doctest::Approx(4 * std::log(6.0)).epsilon(1e-12));
  for (int t = 0; t < 4; ++t) {
    for (int l = 0; l < 6; ++l) CHECK(fb.marginals(t, l) == doctest::Approx(1.0 / 6));
  }
  CHECK(Viterbi(m, seq).labels == std::vector<int>(4, 0));
}

TEST_CASE("single position marginals are a softmax") {
  std::mt19937_64 rng(3);
  CrfModel m = RandomModel(rng, 4, 3, 1.0);
  const FeatureSequence seq = {{0, 2}};
  const auto fb = ForwardBackward(m, seq);
  double z = 0.0;
  std::vector<double> s(4);
  for (int l = 0; l < 4; ++l) {
    s[static_cast<size_t>(l)] = m.state_weights(0, l) + m.state_weights(2, l);
    z += std::exp(s[static_cast<size_t>(l)]);
  }
  for (int l = 0; l < 4; ++l) CHECK(fb.marginals(0, l) == doctest::Approx(std::exp(s[static_cast<size_t>(l)]) / z));
}

TEST_CASE("inference matches enumeration") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const int T = 1 + static_cast<int>(rng() % 5);
    CrfModel m = RandomModel(rng, 6, 5, 1.5);
    const auto seq = RandomSequence(rng, T, 5);
    const auto oracle = oracle::EnumerateCrf(m, seq);
    const auto fb = ForwardBackward(m, seq);
    CHECK(std::abs(fb.log_partition - oracle.log_partition) < 1e-8);
    for (int t = 0; t < T; ++t) {
      for (int l = 0; l < 6; ++l) {
        CHECK(std::abs(fb.marginals(t, l) - oracle.marginals[static_cast<size_t>(t)][static_cast<size_t>(l)]) < 1e-9);
      }
    }
    const auto vit = Viterbi(m, seq);
    CHECK(std::abs(vit.score - oracle.max_score) < 1e-9);
    CHECK(std::abs(SequenceScore(m, seq, vit.labels) - oracle.max_score) < 1e-9);
  }
}

TEST_CASE("gradient matches central differences") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    CrfModel m = RandomModel(rng, 5, 6, 0.7);
    m.l2_lambda = 0.3;
    std::vector<LabeledSequence> batch;
    for (int i = 0; i < 4; ++i) {
      const int T = 1 + static_cast<int>(rng() % 6);
      LabeledSequence s{RandomSequence(rng, T, 6), {}};
      for (int t = 0; t < T; ++t) s.labels.push_back(static_cast<int>(rng() % 5));
      batch.push_back(s);
    }
    const auto lg = NllAndGradient(m, batch);
    const auto theta = m.Parameters();
    for (int c = 0; c < 20; ++c) {
      const size_t k = rng() % theta.size();
      const double eps = 1e-5;
      auto plus = theta;
      auto minus = theta;
      plus[k] += eps;
      minus[k] -= eps;
      CrfModel mp = m;
      CrfModel mm = m;
      mp.SetParameters(plus);
      mm.SetParameters(minus);
      const double fd = (NllAndGradient(mp, batch).loss - NllAndGradient(mm, batch).loss) / (2 * eps);
      const double denom = std::max(1e-6, std::abs(fd) + std::abs(lg.gradient[k]));
      CHECK(std::abs(fd - lg.gradient[k]) / denom < 1e-4);
    }
  }
}

TEST_CASE("duplicated example doubles loss and gradient") {
  std::mt19937_64 rng(31);
  CrfModel m = RandomModel(rng, 3, 4, 1.0);
  LabeledSequence s{RandomSequence(rng, 4, 4), {0, 2, 1, 1}};
  const auto one = NllAndGradient(m, {s});
  const auto two = NllAndGradient(m, {s, s});
  CHECK(two.loss == doctest::Approx(2 * one.loss).epsilon(1e-12));
  for (size_t k = 0; k < one.gradient.size(); ++k) {
    CHECK(two.gradient[k] == doctest::Approx(2 * one.gradient[k]).epsilon(1e-12));
  }
}

TEST_CASE("loss decreases as gold weights scale up") {
  CrfModel m = MakeCrfModel({"O", "X"}, {"a", "b"}, 0.0);
  const LabeledSequence s{{{0}, {1}, {0}}, {0, 1, 0}};
  double previous = std::numeric_limits<double>::infinity();
  for (double scale : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    m.state_weights(0, 0) = scale;
    m.state_weights(1, 1) = scale;
    const double loss = NllAndGradient(m, {s}).loss;
    CHECK(loss < previous);
    previous = loss;
  }
  CHECK(previous < 1e-3);
}

TEST_CASE("gradient is independent of thread count") {
  std::mt19937_64 rng(41);
  CrfModel m = RandomModel(rng, 4, 8, 0.5);
  std::vector<LabeledSequence> batch;
  for (int i = 0; i < 37; ++i) {
    LabeledSequence s{RandomSequence(rng, 5, 8), {}};
    for (int t = 0; t < 5; ++t) s.labels.push_back(static_cast<int>(rng() % 4));
    batch.push_back(s);
  }
  const auto a = NllAndGradient(m, batch, 1);
  const auto b = NllAndGradient(m, batch, 4);
  CHECK(a.loss == b.loss);
  CHECK(a.gradient == b.gradient);
}

TEST_CASE("bad gold label is rejected") {
  CrfModel m = MakeCrfModel({"O", "X"}, {"a"}, 0.0);
  try {
    NllAndGradient(m, {LabeledSequence{{{0}}, {7}}});
    FAIL("expected UnknownLabel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownLabel);
  }
}

TEST_CASE("non-finite weights are detected") {
  CrfModel m = MakeCrfModel({"O", "X"}, {"a"}, 0.0);
  CHECK(m.AllFinite());
  m.transition_weights(0, 1) = std::nan("");
  CHECK_FALSE(m.AllFinite());
  CHECK_THROWS_AS(m.CheckFinite(), Error);
}

TEST_CASE("lbfgs minimizes a quadratic with a monotone history") {
  const Objective f = [](const std::vector<double>& x, std::vector<double>& g) {
    g.assign(x.size(), 0.0);
    double v = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      const double a = static_cast<double>(i + 1);
      v += 0.5 * a * (x[i] - 1.0) * (x[i] - 1.0);
      g[i] = a * (x[i] - 1.0);
    }
    return v;
  };
  LbfgsOptions options;
  options.convergence_tol = 1e-14;
  const auto r = MinimizeLbfgs(f, std::vector<double>(6, -3.0), options);
  for (double xi : r.x) CHECK(xi == doctest::Approx(1.0).epsilon(1e-6));
  for (size_t i = 1; i < r.loss_history.size(); ++i) CHECK(r.loss_history[i] <= r.loss_history[i - 1]);
  CHECK(r.converged);
}

TEST_CASE("lbfgs on rosenbrock") {
  const Objective f = [](const std::vector<double>& x, std::vector<double>& g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g = {-2 * a - 400 * x[0] * b, 200 * b};
    return a * a + 100 * b * b;
  };
  LbfgsOptions options;
  options.max_iterations = 500;
  options.convergence_tol = 0.0;
  const auto r = MinimizeLbfgs(f, {-1.2, 1.0}, options);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));
}
