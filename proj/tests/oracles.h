#pragma once

// Reference implementations written without reusing library code paths.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "preme/crf.h"

namespace preme::oracle {

struct CrfEnumeration {
  double max_score = -std::numeric_limits<double>::infinity();
  std::vector<int> argmax;  // first maximizer in lexicographic order
  double log_partition = 0.0;
  std::vector<std::vector<double>> marginals;  // T x L
};

// Visits all L^T label sequences.
inline CrfEnumeration EnumerateCrf(const CrfModel& model, const FeatureSequence& seq) {
  const int T = static_cast<int>(seq.size());
  const int L = model.num_labels();
  CrfEnumeration out;
  out.marginals.assign(static_cast<size_t>(T), std::vector<double>(static_cast<size_t>(L), 0.0));
  std::vector<int> y(static_cast<size_t>(T), 0);
  std::vector<std::pair<double, std::vector<int>>> all;
  while (true) {
    double s = 0.0;
    for (int t = 0; t < T; ++t) {
      for (int f : seq[static_cast<size_t>(t)]) s += model.state_weights(f, y[static_cast<size_t>(t)]);
      if (t > 0) s += model.transition_weights(y[static_cast<size_t>(t - 1)], y[static_cast<size_t>(t)]);
    }
    if (s > out.max_score) {
      out.max_score = s;
      out.argmax = y;
    }
    all.emplace_back(s, y);
    int pos = T - 1;
    while (pos >= 0 && y[static_cast<size_t>(pos)] == L - 1) y[static_cast<size_t>(pos--)] = 0;
    if (pos < 0) break;
    y[static_cast<size_t>(pos)] += 1;
  }
  double m = out.max_score;
  double z = 0.0;
  for (const auto& [s, _] : all) z += std::exp(s - m);
  out.log_partition = m + std::log(z);
  for (const auto& [s, labels] : all) {
    const double p = std::exp(s - out.log_partition);
    for (int t = 0; t < T; ++t) out.marginals[static_cast<size_t>(t)][static_cast<size_t>(labels[static_cast<size_t>(t)])] += p;
  }
  return out;
}

// Pull-style power iteration: p'[j] = (1-d)/n + d * (sum_i p[i] W[i][j] / out[i]
// + sum_{dangling i} p[i] / n).
inline std::vector<double> PageRankPull(const std::vector<std::vector<double>>& w, double d,
                                        int iterations) {
  const size_t n = w.size();
  std::vector<double> out(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) out[i] += w[i][j];
  }
  std::vector<double> p(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < iterations; ++it) {
    double dangling = 0.0;
    for (size_t i = 0; i < n; ++i) {
      if (out[i] == 0.0) dangling += p[i];
    }
    std::vector<double> q(n);
    for (size_t j = 0; j < n; ++j) {
      double in = 0.0;
      for (size_t i = 0; i < n; ++i) {
        if (out[i] > 0.0) in += p[i] * w[i][j] / out[i];
      }
      q[j] = (1.0 - d) / static_cast<double>(n) + d * (in + dangling / static_cast<double>(n));
    }
    p = q;
  }
  return p;
}

// Solves (I - d M^T) p = (1-d)/n 1 by Gaussian elimination, where M is the
// row-stochastic transition matrix with dangling rows replaced by uniform.
inline std::vector<double> PageRankLinear(const std::vector<std::vector<double>>& w, double d) {
  const size_t n = w.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (size_t i = 0; i < n; ++i) {
    double out = 0.0;
    for (size_t j = 0; j < n; ++j) out += w[i][j];
    for (size_t j = 0; j < n; ++j) {
      const double m = out > 0.0 ? w[i][j] / out : 1.0 / static_cast<double>(n);
      a[j][i] -= d * m;  // row j of (I - d M^T)
    }
  }
  for (size_t i = 0; i < n; ++i) {
    a[i][i] += 1.0;
    a[i][n] = (1.0 - d) / static_cast<double>(n);
  }
  for (size_t c = 0; c < n; ++c) {
    size_t piv = c;
    for (size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    for (size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (size_t k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> p(n);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    p[i] = a[i][n] / a[i][i];
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

// Sentence BLEU-4 on pre-split lowercase tokens, with add-one on orders that
// have no clipped match.
inline double Bleu4(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  double product = 1.0;
  for (int n = 1; n <= 4; ++n) {
    std::unordered_map<std::string, int> rc;
    std::unordered_map<std::string, int> cc;
    auto gram = [&](const std::vector<std::string>& v, size_t i) {
      std::string g;
      for (int k = 0; k < n; ++k) g += v[i + static_cast<size_t>(k)] + "\x1f";
      return g;
    };
    for (size_t i = 0; i + static_cast<size_t>(n) <= ref.size(); ++i) rc[gram(ref, i)]++;
    int total = 0;
    for (size_t i = 0; i + static_cast<size_t>(n) <= cand.size(); ++i) {
      cc[gram(cand, i)]++;
      total++;
    }
    int match = 0;
    for (const auto& [g, c] : cc) match += std::min(c, rc.count(g) ? rc[g] : 0);
    product *= match > 0 ? static_cast<double>(match) / total : 1.0 / (total + 1);
  }
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::pow(product, 0.25);
}

// Nominal Krippendorff alpha from the coincidence matrix. Values are category
// names; "" marks a missing value.
inline double NominalAlpha(const std::vector<std::vector<std::string>>& items) {
  std::map<std::pair<std::string, std::string>, double> o;
  for (const auto& item : items) {
    std::vector<std::string> vals;
    for (const auto& v : item) {
      if (!v.empty()) vals.push_back(v);
    }
    if (vals.size() < 2) continue;
    const double m = static_cast<double>(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) {
      for (size_t j = 0; j < vals.size(); ++j) {
        if (i != j) o[{vals[i], vals[j]}] += 1.0 / (m - 1.0);
      }
    }
  }
  std::map<std::string, double> nc;
  double n = 0.0;
  for (const auto& [key, v] : o) {
    nc[key.first] += v;
    n += v;
  }
  double disagree_obs = 0.0;
  for (const auto& [key, v] : o) {
    if (key.first != key.second) disagree_obs += v;
  }
  double disagree_exp = 0.0;
  for (const auto& [c, a] : nc) {
    for (const auto& [k, b] : nc) {
      if (c != k) disagree_exp += a * b;
    }
  }
  return 1.0 - (n - 1.0) * disagree_obs / disagree_exp;
}

}  // namespace preme::oracle
