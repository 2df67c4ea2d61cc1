#include "hoag/hoag.hpp"

#include <cmath>
#include <stdexcept>

namespace hoag {

void AdaptiveStepConfig::validate() const {
  if (!(M >= 0.0)) throw std::invalid_argument("step config: M must be nonnegative");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("step config: alpha must lie in (0, 1)");
  if (!(beta > 1.0)) throw std::invalid_argument("step config: beta must exceed 1");
  if (!(decrease_factor >= 0.0)) throw std::invalid_argument("step config: decrease_factor must be nonnegative");
  if (max_shrinks < 0) throw std::invalid_argument("step config: max_shrinks must be nonnegative");
}

HoagConfig HoagConfig::defaults(const BilevelProblem& problem) {
  HoagConfig config{ToleranceSchedule{}, BoxDomain::symmetric(problem.hyper_dim()), problem.default_lambda(), {}};
  return config;
}

void HoagConfig::validate() const {
  schedule.validate();
  step.validate();
  if (lambda0.size() != domain.dim()) throw std::invalid_argument("lambda0 and domain differ in dimension");
  if (!domain.contains(lambda0)) throw std::invalid_argument("lambda0 lies outside the domain");
  if (max_outer_iters < 1) throw std::invalid_argument("max_outer_iters must be >= 1");
  if (inner_max_iters < 0 || cg_max_iters < 0) throw std::invalid_argument("iteration caps must be nonnegative");
}

HypergradientResult approx_hypergradient(const BilevelProblem& problem, const HyperParams& lambda,
                                         const ModelParams& x_warm, const Vector& q_warm, double eps,
                                         int inner_max_iters, int cg_max_iters) {
  HypergradientResult out;
  out.inner = inner_solve(problem, lambda, x_warm, eps, inner_max_iters);
  out.x = out.inner.x;
  const Vector rhs = problem.outer_grad_params(out.x, lambda);
  require_finite(rhs, "outer gradient");
  out.cg = cg_solve(problem.hessian_operator(out.x, lambda), rhs, q_warm, eps, cg_max_iters);
  out.q = out.cg.q;
  out.gradient = problem.outer_grad_hyper(out.x, lambda) - problem.cross_vec(out.x, lambda, out.q);
  require_finite(out.gradient, "hypergradient");
  out.outer_value = problem.outer_loss(out.x, lambda);
  require_finite(out.outer_value, "outer loss");
  return out;
}

HypergradientOracle::Solve ImplicitOracle::solve(const HyperParams& lambda, double eps, const ModelParams& x_warm) {
  InnerSolveReport report = inner_solve(problem_, lambda, x_warm, eps, inner_max_iters_);
  Solve out;
  out.outer_value = problem_.outer_loss(report.x, lambda);
  require_finite(out.outer_value, "outer loss");
  out.x = std::move(report.x);
  out.work = report.iterations;
  out.converged = report.converged;
  return out;
}

HypergradientOracle::Gradient ImplicitOracle::gradient(const HyperParams& lambda, const ModelParams& x, double eps,
                                                       const Vector& q_warm) {
  const Vector rhs = problem_.outer_grad_params(x, lambda);
  require_finite(rhs, "outer gradient");
  CgReport cg = cg_solve(problem_.hessian_operator(x, lambda), rhs, q_warm, eps, cg_max_iters_);
  Gradient out;
  out.gradient = problem_.outer_grad_hyper(x, lambda) - problem_.cross_vec(x, lambda, cg.q);
  require_finite(out.gradient, "hypergradient");
  out.q = std::move(cg.q);
  out.work = cg.iterations;
  out.converged = cg.converged;
  return out;
}

namespace {

void append_record(HoagState& state) {
  TraceRecord r;
  r.k = state.k;
  r.lambda = state.lambda;
  r.epsilon = state.epsilon;
  r.outer_value = state.outer_value;
  r.grad_norm = state.gradient.norm();
  r.step_size = state.step_size;
  r.inner_iters = state.inner_iters;
  r.cg_iters = state.cg_iters;
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - state.started).count();
  state.trace.push_back(std::move(r));
}

}  // namespace

HoagState descent_init(HypergradientOracle& oracle, const HoagConfig& config, bool zero_tolerance) {
  config.validate();
  HoagState state;
  state.started = std::chrono::steady_clock::now();
  state.lambda = config.lambda0;
  state.x = Vector::Zero(oracle.param_dim());
  state.q = Vector::Zero(oracle.param_dim());
  state.k = 1;
  state.epsilon = zero_tolerance ? 0.0 : config.schedule.at(1);

  const double eps = config.schedule.at(1);
  HypergradientOracle::Solve solve = oracle.solve(state.lambda, eps, state.x);
  HypergradientOracle::Gradient grad = oracle.gradient(state.lambda, solve.x, eps, state.q);
  state.x = std::move(solve.x);
  state.outer_value = solve.outer_value;
  state.q = std::move(grad.q);
  state.gradient = std::move(grad.gradient);
  state.inner_iters = solve.work;
  state.cg_iters = grad.work;
  state.warnings += static_cast<int>(!solve.converged) + static_cast<int>(!grad.converged);

  const double norm = state.gradient.norm();
  if (norm > 0.0) {
    state.step_size = 1.0 / norm;
  } else {
    state.step_size = 1.0;
    state.finished = true;
  }
  if (config.max_outer_iters <= 1) state.finished = true;
  append_record(state);
  return state;
}

HoagState descent_step(HypergradientOracle& oracle, HoagState state, const HoagConfig& config, bool zero_tolerance) {
  if (state.finished) return state;
  const AdaptiveStepConfig& sc = config.step;
  const double eps_next = config.schedule.at(state.k + 1);
  const double eps_old = zero_tolerance ? 0.0 : state.epsilon;
  const double eps_new = zero_tolerance ? 0.0 : eps_next;

  HyperParams candidate;
  HypergradientOracle::Solve solve;
  double delta = 0.0;
  for (int attempt = 0;; ++attempt) {
    candidate = config.domain.project(state.lambda - state.step_size * state.gradient);
    delta = (candidate - state.lambda).norm();
    solve = oracle.solve(candidate, eps_next, state.x);
    state.inner_iters += solve.work;

    // No earlier pair exists to test the first update against.
    if (state.k == 1) break;

    const double lipschitz = oracle.outer_lipschitz(state.lambda);
    const double bound = state.outer_value + lipschitz * eps_new + eps_old * (lipschitz + sc.M) * delta -
                         sc.decrease_factor * delta * delta / state.step_size;
    if (solve.outer_value <= bound) {
      state.step_size *= sc.beta;
      break;
    }
    if (attempt >= sc.max_shrinks) {
      ++state.warnings;
      break;
    }
    state.step_size *= sc.alpha;
  }
  state.warnings += static_cast<int>(!solve.converged);

  HypergradientOracle::Gradient grad = oracle.gradient(candidate, solve.x, eps_next, state.q);
  state.cg_iters += grad.work;
  state.warnings += static_cast<int>(!grad.converged);

  state.lambda = std::move(candidate);
  state.x = std::move(solve.x);
  state.outer_value = solve.outer_value;
  state.q = std::move(grad.q);
  state.gradient = std::move(grad.gradient);
  state.epsilon = eps_new;
  ++state.k;

  // A vanishing step only signals stationarity once the gradient is exact:
  // a coarse inner solve can return a model whose hypergradient is zero.
  const bool settled = zero_tolerance || eps_next <= config.schedule.floor;
  state.small_steps = delta <= config.min_step && settled ? state.small_steps + 1 : 0;
  if (state.small_steps >= config.min_step_repeats || state.k >= config.max_outer_iters) state.finished = true;
  append_record(state);
  return state;
}

HoagState descent_run(HypergradientOracle& oracle, const HoagConfig& config, const TraceSink& sink,
                      bool zero_tolerance) {
  HoagState state = descent_init(oracle, config, zero_tolerance);
  if (sink) sink(state.trace.back());
  while (!state.finished) {
    state = descent_step(oracle, std::move(state), config, zero_tolerance);
    if (sink) sink(state.trace.back());
  }
  return state;
}

HoagState hoag_init(const BilevelProblem& problem, const HoagConfig& config) {
  ImplicitOracle oracle(problem, config.inner_max_iters, config.cg_max_iters);
  return descent_init(oracle, config);
}

HoagState hoag_step(const BilevelProblem& problem, HoagState state, const HoagConfig& config) {
  ImplicitOracle oracle(problem, config.inner_max_iters, config.cg_max_iters);
  return descent_step(oracle, std::move(state), config);
}

HoagState hoag_run(const BilevelProblem& problem, const HoagConfig& config, const TraceSink& sink) {
  ImplicitOracle oracle(problem, config.inner_max_iters, config.cg_max_iters);
  return descent_run(oracle, config, sink);
}

double projected_gradient_norm(const BoxDomain& domain, const HyperParams& lambda, const Vector& gradient) {
  return (lambda - domain.project(lambda - gradient)).norm();
}

}  // namespace hoag
