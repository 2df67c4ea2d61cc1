#include "hoag/baselines.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "hoag/solvers.hpp"

namespace hoag {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class SearchRecorder {
 public:
  SearchRecorder(const BilevelProblem& problem, int inner_max_iters, const TraceSink& sink)
      : problem_(problem), inner_max_iters_(inner_max_iters), sink_(sink), started_(std::chrono::steady_clock::now()) {
    result_.best_value = std::numeric_limits<double>::infinity();
  }

  void evaluate(const HyperParams& lambda) {
    int iters = 0;
    const double value = evaluate_outer(problem_, lambda, inner_max_iters_, &iters);
    inner_iters_ += iters;
    TraceRecord r;
    r.k = static_cast<std::int64_t>(result_.trace.size()) + 1;
    r.lambda = lambda;
    r.epsilon = kDefaultToleranceFloor;
    r.outer_value = value;
    r.grad_norm = kNaN;
    r.step_size = kNaN;
    r.inner_iters = inner_iters_;
    r.cg_iters = 0;
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    if (value < result_.best_value) {
      result_.best_value = value;
      result_.best_lambda = lambda;
    }
    result_.trace.push_back(r);
    if (sink_) sink_(r);
  }

  SearchResult take() { return std::move(result_); }

 private:
  const BilevelProblem& problem_;
  int inner_max_iters_;
  const TraceSink& sink_;
  std::chrono::steady_clock::time_point started_;
  std::int64_t inner_iters_ = 0;
  SearchResult result_;
};

}  // namespace

double evaluate_outer(const BilevelProblem& problem, const HyperParams& lambda, int inner_max_iters, int* iterations) {
  const InnerSolveReport report =
      inner_solve(problem, lambda, Vector::Zero(problem.param_dim()), kDefaultToleranceFloor, inner_max_iters);
  if (iterations) *iterations = report.iterations;
  const double value = problem.outer_loss(report.x, lambda);
  require_finite(value, "outer loss");
  return value;
}

SearchResult grid_search(const BilevelProblem& problem, const BoxDomain& domain, int points_per_dim,
                         const EvaluationBudget& budget, const TraceSink& sink) {
  if (points_per_dim < 2) throw std::invalid_argument("grid search needs at least 2 points per dimension");
  if (domain.dim() != problem.hyper_dim()) throw std::invalid_argument("grid search: domain dimension mismatch");
  const Index s = domain.dim();

  // Odometer over grid indices, last coordinate fastest.
  std::vector<int> index(static_cast<std::size_t>(s), 0);
  SearchRecorder recorder(problem, budget.inner_max_iters, sink);
  for (std::int64_t evaluated = 0; evaluated < budget.max_evaluations; ++evaluated) {
    HyperParams lambda(s);
    for (Index j = 0; j < s; ++j) {
      const double t = static_cast<double>(index[j]) / (points_per_dim - 1);
      lambda[j] = domain.lower()[j] + t * (domain.upper()[j] - domain.lower()[j]);
    }
    recorder.evaluate(lambda);

    Index j = s - 1;
    while (j >= 0 && ++index[j] == points_per_dim) index[j--] = 0;
    if (j < 0) break;
  }
  return recorder.take();
}

SearchResult random_search(const BilevelProblem& problem, const BoxDomain& domain, const EvaluationBudget& budget,
                           std::uint64_t seed, const TraceSink& sink) {
  if (budget.max_evaluations < 1) throw std::invalid_argument("random search needs a positive budget");
  if (domain.dim() != problem.hyper_dim()) throw std::invalid_argument("random search: domain dimension mismatch");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SearchRecorder recorder(problem, budget.inner_max_iters, sink);
  for (std::int64_t e = 0; e < budget.max_evaluations; ++e) {
    HyperParams lambda(domain.dim());
    for (Index j = 0; j < domain.dim(); ++j)
      lambda[j] = domain.lower()[j] + unit(rng) * (domain.upper()[j] - domain.lower()[j]);
    recorder.evaluate(domain.project(lambda));
  }
  return recorder.take();
}

double iterdiff_default_step(const BilevelProblem& problem, const HyperParams& lambda, const ModelParams& x0) {
  const LinearOperator hessian = problem.hessian_operator(x0, lambda);
  Vector v = Vector::Ones(problem.param_dim()).normalized();
  double top = 0.0;
  for (int it = 0; it < 20; ++it) {
    const Vector hv = hessian(v);
    require_finite(hv, "Hessian-vector product");
    top = hv.norm();
    if (top == 0.0) break;
    v = hv / top;
  }
  return 2.0 / (problem.strong_convexity(lambda) + top);
}

namespace {

struct ForwardPass {
  std::vector<ModelParams> iterates;  // x_0 .. x_T
  double step;
};

ForwardPass run_forward(const BilevelProblem& problem, const HyperParams& lambda, const ModelParams& x0, int steps,
                        std::optional<double> eta_inner) {
  if (steps < 1) throw std::invalid_argument("iterdiff needs at least one step");
  ForwardPass pass;
  pass.step = eta_inner ? *eta_inner : iterdiff_default_step(problem, lambda, x0);
  if (!(pass.step > 0.0)) throw std::invalid_argument("iterdiff step must be positive");
  pass.iterates.reserve(static_cast<std::size_t>(steps) + 1);
  pass.iterates.push_back(x0);

  double previous = problem.inner_loss(x0, lambda);
  require_finite(previous, "inner loss");
  int rising = 0;
  for (int t = 0; t < steps; ++t) {
    const ModelParams& x = pass.iterates.back();
    const Vector grad = problem.inner_grad(x, lambda);
    require_finite(grad, "inner gradient");
    pass.iterates.push_back(x - pass.step * grad);
    const double value = problem.inner_loss(pass.iterates.back(), lambda);
    require_finite(value, "inner loss");
    rising = value > previous ? rising + 1 : 0;
    if (rising >= 10) throw DivergedError("iterdiff forward pass diverged");
    previous = value;
  }
  return pass;
}

Vector run_reverse(const BilevelProblem& problem, const HyperParams& lambda, const ForwardPass& pass) {
  const ModelParams& last = pass.iterates.back();
  Vector adjoint = problem.outer_grad_params(last, lambda);
  Vector grad = problem.outer_grad_hyper(last, lambda);
  for (std::size_t t = pass.iterates.size() - 1; t-- > 0;) {
    const ModelParams& x = pass.iterates[t];
    grad -= pass.step * problem.cross_vec(x, lambda, adjoint);
    adjoint -= pass.step * problem.hessian_vec(x, lambda, adjoint);
  }
  require_finite(grad, "hypergradient");
  return grad;
}

}  // namespace

IterdiffResult iterdiff_gradient(const BilevelProblem& problem, const HyperParams& lambda, const ModelParams& x0,
                                 int steps, std::optional<double> eta_inner) {
  const ForwardPass pass = run_forward(problem, lambda, x0, steps, eta_inner);
  IterdiffResult out;
  out.gradient = run_reverse(problem, lambda, pass);
  out.x = pass.iterates.back();
  out.outer_value = problem.outer_loss(out.x, lambda);
  out.step = pass.step;
  out.steps = steps;
  return out;
}

IterdiffOracle::IterdiffOracle(const BilevelProblem& problem, int steps, std::optional<double> eta_inner)
    : problem_(problem), steps_(steps), eta_inner_(eta_inner) {}

HypergradientOracle::Solve IterdiffOracle::solve(const HyperParams& lambda, double, const ModelParams&) {
  ForwardPass pass = run_forward(problem_, lambda, Vector::Zero(problem_.param_dim()), steps_, eta_inner_);
  Solve out;
  out.x = pass.iterates.back();
  out.outer_value = problem_.outer_loss(out.x, lambda);
  require_finite(out.outer_value, "outer loss");
  out.work = steps_;
  last_lambda_ = lambda;
  last_step_ = pass.step;
  trajectory_ = std::move(pass.iterates);
  return out;
}

HypergradientOracle::Gradient IterdiffOracle::gradient(const HyperParams& lambda, const ModelParams& x, double,
                                                       const Vector&) {
  if (trajectory_.empty() || last_lambda_.size() != lambda.size() || last_lambda_ != lambda ||
      trajectory_.back() != x)
    solve(lambda, 0.0, x);
  const ForwardPass pass{std::move(trajectory_), last_step_};
  trajectory_.clear();
  Gradient out;
  out.gradient = run_reverse(problem_, lambda, pass);
  out.q = Vector::Zero(problem_.param_dim());
  out.work = steps_;
  return out;
}

HoagState iterdiff_run(const BilevelProblem& problem, const IterdiffConfig& config, const TraceSink& sink) {
  IterdiffOracle oracle(problem, config.steps, config.eta_inner);
  return descent_run(oracle, config.outer, sink, /*zero_tolerance=*/true);
}

}  // namespace hoag
