#pragma once

#include <functional>

#include "hoag/core.hpp"

namespace hoag {

/// Outcome of an inexact inner solve. `achieved_bound` is
/// mu(lambda)^-1 * ||grad_x h(x, lambda)||, an upper bound on ||X(lambda) - x||.
struct InnerSolveReport {
  ModelParams x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  double achieved_bound = 0.0;
  bool converged = false;
};

struct CgReport {
  Vector q;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct InnerSolveOptions {
  int memory = 10;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  /// Called with (iteration, x, h(x)) after every accepted step.
  std::function<void(int, const Vector&, double)> on_iterate;
};

/// Limited-memory quasi-Newton descent on h(., lambda), warm-started at x0,
/// stopped once mu^-1 ||grad h|| <= eps. Quadratic inner problems are routed
/// to cg_solve on the normal equation A x = b. Running out of iterations is
/// reported through `converged`, not thrown; non-finite oracle output throws
/// NonFiniteError.
InnerSolveReport inner_solve(const BilevelProblem& problem, const HyperParams& lambda, const ModelParams& x0,
                             double eps, int max_iters = kDefaultInnerMaxIters,
                             const InnerSolveOptions& options = {});

/// Matrix-free conjugate gradient for A q = b, warm-started at q0 and stopped
/// once ||A q - b|| <= eps. The reported residual is recomputed from scratch.
CgReport cg_solve(const LinearOperator& apply_A, const Vector& b, const Vector& q0, double eps, int max_iters);

}  // namespace hoag
