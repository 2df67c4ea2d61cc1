#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hoag/core.hpp"
#include "hoag/hoag.hpp"

namespace hoag {

struct EvaluationBudget {
  std::int64_t max_evaluations = 100;
  /// Inner iteration cap per evaluation.
  int inner_max_iters = kDefaultInnerMaxIters;
};

struct SearchResult {
  HyperParams best_lambda;
  double best_value = 0.0;
  std::vector<TraceRecord> trace;
};

/// Outer value f(lambda) from a cold-started inner solve at the floor tolerance.
double evaluate_outer(const BilevelProblem& problem, const HyperParams& lambda, int inner_max_iters,
                      int* iterations = nullptr);

/// Equally spaced grid, `points_per_dim` values per coordinate including both
/// bounds, visited in lexicographic order (first coordinate slowest). Ties
/// keep the earliest point. At most budget.max_evaluations points are tried.
SearchResult grid_search(const BilevelProblem& problem, const BoxDomain& domain, int points_per_dim = 10,
                         const EvaluationBudget& budget = {}, const TraceSink& sink = {});

/// Independent uniform samples from the box; the same seed gives the same sequence.
SearchResult random_search(const BilevelProblem& problem, const BoxDomain& domain, const EvaluationBudget& budget,
                           std::uint64_t seed, const TraceSink& sink = {});

/// 2 / (mu + L), with L from 20 power iterations on the inner Hessian at x0.
double iterdiff_default_step(const BilevelProblem& problem, const HyperParams& lambda, const ModelParams& x0);

struct IterdiffResult {
  Vector gradient;
  ModelParams x;  // x_T
  double outer_value = 0.0;
  double step = 0.0;
  int steps = 0;
};

/// Runs `steps` gradient-descent iterations x_{t+1} = x_t - eta grad_x h(x_t)
/// from x0 and back-propagates grad_x g(x_T) through them. Throws
/// DivergedError when h rises for 10 consecutive steps.
IterdiffResult iterdiff_gradient(const BilevelProblem& problem, const HyperParams& lambda, const ModelParams& x0,
                                 int steps, std::optional<double> eta_inner = std::nullopt);

/// Unrolled-differentiation oracle. Every solve restarts from zero.
class IterdiffOracle final : public HypergradientOracle {
 public:
  IterdiffOracle(const BilevelProblem& problem, int steps, std::optional<double> eta_inner = std::nullopt);

  Solve solve(const HyperParams& lambda, double eps, const ModelParams& x_warm) override;
  Gradient gradient(const HyperParams& lambda, const ModelParams& x, double eps, const Vector& q_warm) override;
  Index param_dim() const override { return problem_.param_dim(); }
  double outer_lipschitz(const HyperParams& lambda) const override { return problem_.outer_lipschitz(lambda); }

 private:
  const BilevelProblem& problem_;
  int steps_;
  std::optional<double> eta_inner_;
  // Trajectory of the last solve, consumed by gradient().
  HyperParams last_lambda_;
  double last_step_ = 0.0;
  std::vector<ModelParams> trajectory_;
};

struct IterdiffConfig {
  HoagConfig outer;
  int steps = kDefaultInnerMaxIters;
  std::optional<double> eta_inner;
};

/// Same adaptive projected-gradient loop as HOAG with unrolled gradients and
/// the tolerance terms of the step test set to zero.
HoagState iterdiff_run(const BilevelProblem& problem, const IterdiffConfig& config, const TraceSink& sink = {});

}  // namespace hoag
