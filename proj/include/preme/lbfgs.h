#pragma once

#include <functional>
#include <vector>

namespace preme {

struct LbfgsOptions {
  int max_iterations = 200;
  int memory = 10;
  double convergence_tol = 1e-6;  // stop when loss improvement falls below
  double gradient_tol = 1e-8;     // or when the gradient inf-norm does
  double armijo_c1 = 1e-4;
  int max_line_search_steps = 40;
};

struct LbfgsResult {
  std::vector<double> x;
  double loss = 0.0;
  std::vector<double> loss_history;  // loss after each accepted step, x0 first
  int iterations = 0;
  bool converged = false;
};

using Objective =
    std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;

// Limited-memory BFGS with a backtracking Armijo line search. Every accepted
// step strictly decreases the objective, so loss_history is non-increasing.
LbfgsResult MinimizeLbfgs(const Objective& objective, std::vector<double> x0,
                          const LbfgsOptions& options);

}  // namespace preme
