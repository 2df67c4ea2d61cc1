#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "hoag/core.hpp"
#include "hoag/solvers.hpp"

namespace hoag {

/// Step-size adaptation. After each proposed update the outer loss at the
/// candidate is tested against
///
///   g_new <= g_old + C eps_new + eps_old (C + M) Delta - decrease_factor * Delta^2 / eta
///
/// and eta grows by `beta` when it holds, shrinks by `alpha` (and the step is
/// retried) when it does not.
struct AdaptiveStepConfig {
  double M = 1.0;
  double alpha = 0.5;
  double beta = 1.05;
  /// Weight of the Delta^2 / eta term. 0.5 is the projected-gradient descent
  /// lemma; 1.0 drops the factor 1/2.
  double decrease_factor = 0.5;
  int max_shrinks = 20;

  void validate() const;
};

struct HoagConfig {
  ToleranceSchedule schedule;
  BoxDomain domain;
  HyperParams lambda0;
  AdaptiveStepConfig step;
  std::int64_t max_outer_iters = 100;
  int inner_max_iters = kDefaultInnerMaxIters;
  int cg_max_iters = kDefaultInnerMaxIters;
  /// The run stops after `min_step_repeats` consecutive updates shorter than
  /// `min_step` taken once the schedule has reached its floor.
  double min_step = 1e-10;
  int min_step_repeats = 3;

  /// Exponential schedule, [-12, 12]^s, the problem's default starting point.
  static HoagConfig defaults(const BilevelProblem& problem);
  void validate() const;
};

/// Result of Algorithm steps (i)-(iii) at one lambda.
struct HypergradientResult {
  Vector gradient;
  ModelParams x;
  Vector q;
  double outer_value = 0.0;
  InnerSolveReport inner;
  CgReport cg;
};

/// Inexact hypergradient: x from an eps-accurate inner solve, q from an
/// eps-accurate CG solve of H(x) q = grad_x g, then
/// p = grad_lambda g - cross(x)^T q. Solver non-convergence is reported in
/// `inner` / `cg` and is not an error.
HypergradientResult approx_hypergradient(const BilevelProblem& problem, const HyperParams& lambda,
                                         const ModelParams& x_warm, const Vector& q_warm, double eps,
                                         int inner_max_iters = kDefaultInnerMaxIters,
                                         int cg_max_iters = kDefaultInnerMaxIters);

/// Source of outer values and (approximate) hypergradients for the adaptive
/// projected-gradient loop. `solve` fixes the model at a candidate lambda;
/// `gradient` differentiates at the most recent accepted solve.
class HypergradientOracle {
 public:
  struct Solve {
    ModelParams x;
    double outer_value = 0.0;
    std::int64_t work = 0;
    bool converged = true;
  };
  struct Gradient {
    Vector gradient;
    Vector q;
    std::int64_t work = 0;
    bool converged = true;
  };

  virtual ~HypergradientOracle() = default;
  virtual Solve solve(const HyperParams& lambda, double eps, const ModelParams& x_warm) = 0;
  virtual Gradient gradient(const HyperParams& lambda, const ModelParams& x, double eps, const Vector& q_warm) = 0;
  virtual Index param_dim() const = 0;
  virtual double outer_lipschitz(const HyperParams& lambda) const = 0;
};

/// Implicit-differentiation oracle with warm starts (the HOAG gradient).
class ImplicitOracle final : public HypergradientOracle {
 public:
  ImplicitOracle(const BilevelProblem& problem, int inner_max_iters, int cg_max_iters)
      : problem_(problem), inner_max_iters_(inner_max_iters), cg_max_iters_(cg_max_iters) {}

  Solve solve(const HyperParams& lambda, double eps, const ModelParams& x_warm) override;
  Gradient gradient(const HyperParams& lambda, const ModelParams& x, double eps, const Vector& q_warm) override;
  Index param_dim() const override { return problem_.param_dim(); }
  double outer_lipschitz(const HyperParams& lambda) const override { return problem_.outer_lipschitz(lambda); }

 private:
  const BilevelProblem& problem_;
  int inner_max_iters_;
  int cg_max_iters_;
};

/// Per-run state. `gradient`, `outer_value` and `epsilon` belong to the
/// current iterate `lambda`.
struct HoagState {
  HyperParams lambda;
  ModelParams x;
  Vector q;
  double step_size = 1.0;
  std::int64_t k = 1;
  std::vector<TraceRecord> trace;

  Vector gradient;
  double outer_value = 0.0;
  double epsilon = 0.0;
  std::int64_t inner_iters = 0;
  std::int64_t cg_iters = 0;
  int small_steps = 0;
  /// Updates accepted after exhausting the shrink budget, plus unconverged solves.
  int warnings = 0;
  bool finished = false;
  std::chrono::steady_clock::time_point started;
};

/// Evaluates lambda0 at eps_1 and sets eta = 1 / ||p_1|| so the first update
/// has length at most 1. A zero first gradient finishes the run.
HoagState descent_init(HypergradientOracle& oracle, const HoagConfig& config, bool zero_tolerance = false);
/// One projected update with step-size adaptation; appends one trace record.
HoagState descent_step(HypergradientOracle& oracle, HoagState state, const HoagConfig& config,
                       bool zero_tolerance = false);
HoagState descent_run(HypergradientOracle& oracle, const HoagConfig& config, const TraceSink& sink = {},
                      bool zero_tolerance = false);

HoagState hoag_init(const BilevelProblem& problem, const HoagConfig& config);
HoagState hoag_step(const BilevelProblem& problem, HoagState state, const HoagConfig& config);
HoagState hoag_run(const BilevelProblem& problem, const HoagConfig& config, const TraceSink& sink = {});

/// ||lambda - P(lambda - grad)||, zero exactly at stationary points of the box problem.
double projected_gradient_norm(const BoxDomain& domain, const HyperParams& lambda, const Vector& gradient);

}  // namespace hoag
