#include "preme/lbfgs.h"

#include <cmath>
#include <deque>
#include <numeric>

namespace preme {
namespace {

double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double InfNorm(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

LbfgsResult MinimizeLbfgs(const Objective& objective, std::vector<double> x0,
                          const LbfgsOptions& options) {
  const size_t n = x0.size();
  LbfgsResult out;
  out.x = std::move(x0);
  std::vector<double> grad(n, 0.0);
  out.loss = objective(out.x, grad);
  out.loss_history.push_back(out.loss);

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> history;
  std::vector<double> dir(n), x_new(n), g_new(n), alpha_buf;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (InfNorm(grad) < options.gradient_tol) {
      out.converged = true;
      break;
    }
    // Two-loop recursion for dir = -H * grad.
    dir = grad;
    alpha_buf.assign(history.size(), 0.0);
    for (size_t k = history.size(); k-- > 0;) {
      alpha_buf[k] = history[k].rho * Dot(history[k].s, dir);
      for (size_t i = 0; i < n; ++i) dir[i] -= alpha_buf[k] * history[k].y[i];
    }
    if (!history.empty()) {
      const Pair& last = history.back();
      const double gamma = Dot(last.s, last.y) / Dot(last.y, last.y);
      for (double& d : dir) d *= gamma;
    }
    for (size_t k = 0; k < history.size(); ++k) {
      const double beta = history[k].rho * Dot(history[k].y, dir);
      for (size_t i = 0; i < n; ++i) dir[i] += history[k].s[i] * (alpha_buf[k] - beta);
    }
    for (double& d : dir) d = -d;

    double slope = Dot(grad, dir);
    if (!(slope < 0.0)) {
      history.clear();
      for (size_t i = 0; i < n; ++i) dir[i] = -grad[i];
      slope = Dot(grad, dir);
    }
    double step = history.empty() ? 1.0 / std::max(1.0, std::sqrt(Dot(grad, grad)))
                                  : 1.0;
    bool accepted = false;
    double loss_new = 0.0;
    for (int ls = 0; ls < options.max_line_search_steps; ++ls) {
      for (size_t i = 0; i < n; ++i) x_new[i] = out.x[i] + step * dir[i];
      loss_new = objective(x_new, g_new);
      if (std::isfinite(loss_new) &&
          loss_new <= out.loss + options.armijo_c1 * step * slope &&
          loss_new < out.loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.converged = true;  // no further decrease is representable
      break;
    }

    Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - out.x[i];
      p.y[i] = g_new[i] - grad[i];
    }
    const double sy = Dot(p.s, p.y);
    if (sy > 1e-12) {
      p.rho = 1.0 / sy;
      history.push_back(std::move(p));
      if (static_cast<int>(history.size()) > options.memory) history.pop_front();
    }

    const double improvement = out.loss - loss_new;
    out.x.swap(x_new);
    grad.swap(g_new);
    out.loss = loss_new;
    out.loss_history.push_back(loss_new);
    out.iterations = iter + 1;
    if (improvement < options.convergence_tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace preme
