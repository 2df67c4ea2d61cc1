#include "hoag/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace hoag {
namespace {

constexpr double kMachineEps = std::numeric_limits<double>::epsilon();

struct CurvaturePair {
  Vector s;
  Vector y;
  double rho;
};

// Two-loop recursion: returns H_k * g for the implicit inverse-Hessian approximation.
Vector apply_inverse_hessian(const std::deque<CurvaturePair>& history, const Vector& g) {
  Vector q = g;
  std::vector<double> alpha(history.size());
  for (std::size_t i = history.size(); i-- > 0;) {
    alpha[i] = history[i].rho * history[i].s.dot(q);
    q -= alpha[i] * history[i].y;
  }
  const CurvaturePair& last = history.back();
  q *= last.s.dot(last.y) / last.y.squaredNorm();
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double beta = history[i].rho * history[i].y.dot(q);
    q += (alpha[i] - beta) * history[i].s;
  }
  return q;
}

InnerSolveReport solve_quadratic(const BilevelProblem& problem, const HyperParams& lambda, const ModelParams& x0,
                                 double eps, int max_iters, double mu) {
  const Vector zero = Vector::Zero(problem.param_dim());
  const Vector rhs = -problem.inner_grad(zero, lambda);
  require_finite(rhs, "inner gradient");
  // grad h = A x - b, so the residual bound mu^-1 ||r|| <= eps is ||r|| <= mu * eps.
  const CgReport cg = cg_solve(problem.hessian_operator(zero, lambda), rhs, x0, mu * eps, max_iters);

  InnerSolveReport report;
  report.x = cg.q;
  report.value = problem.inner_loss(cg.q, lambda);
  report.grad_norm = cg.residual_norm;
  report.iterations = cg.iterations;
  report.achieved_bound = cg.residual_norm / mu;
  report.converged = report.achieved_bound <= eps;
  return report;
}

}  // namespace

InnerSolveReport inner_solve(const BilevelProblem& problem, const HyperParams& lambda, const ModelParams& x0,
                             double eps, int max_iters, const InnerSolveOptions& options) {
  if (!(eps > 0.0)) throw std::invalid_argument("inner_solve: eps must be positive");
  if (x0.size() != problem.param_dim()) throw std::invalid_argument("inner_solve: x0 has wrong length");
  const double mu = problem.strong_convexity(lambda);
  if (!(mu > 0.0)) throw std::invalid_argument("inner_solve: problem is not strongly convex at lambda");

  if (problem.inner_is_quadratic()) return solve_quadratic(problem, lambda, x0, eps, max_iters, mu);

  Vector x = x0;
  double fx = problem.inner_loss(x, lambda);
  Vector gx = problem.inner_grad(x, lambda);
  require_finite(fx, "inner loss");
  require_finite(gx, "inner gradient");

  std::deque<CurvaturePair> history;
  double gnorm = gx.norm();
  int iter = 0;

  while (gnorm / mu > eps && iter < max_iters) {
    Vector direction;
    double step = 1.0;
    if (history.empty()) {
      direction = -gx;
      step = std::min(1.0, 1.0 / gnorm);
    } else {
      direction = -apply_inverse_hessian(history, gx);
    }
    double slope = gx.dot(direction);
    if (!(slope < 0.0)) {
      history.clear();
      direction = -gx;
      step = std::min(1.0, 1.0 / gnorm);
      slope = -gnorm * gnorm;
    }

    Vector x_new;
    Vector g_new;
    double f_new = fx;
    bool accepted = false;
    for (int bt = 0; bt <= options.max_backtracks; ++bt, step *= options.backtrack) {
      x_new = x + step * direction;
      f_new = problem.inner_loss(x_new, lambda);
      if (!std::isfinite(f_new)) continue;
      if (f_new <= fx + options.armijo * step * slope) {
        g_new = problem.inner_grad(x_new, lambda);
        accepted = true;
        break;
      }
      // The predicted decrease is below what double precision can resolve on
      // h; accept the trial when h stays within rounding and the gradient shrinks.
      const double resolution = 8.0 * kMachineEps * (1.0 + std::abs(fx));
      if (-step * slope < resolution && f_new <= fx + resolution) {
        g_new = problem.inner_grad(x_new, lambda);
        if (g_new.norm() < gnorm) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) break;  // stalled; report the best iterate
    require_finite(g_new, "inner gradient");

    Vector s = x_new - x;
    Vector y = g_new - gx;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      history.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(history.size()) > options.memory) history.pop_front();
    }

    x = std::move(x_new);
    gx = std::move(g_new);
    fx = f_new;
    gnorm = gx.norm();
    ++iter;
    if (options.on_iterate) options.on_iterate(iter, x, fx);
  }

  InnerSolveReport report;
  report.x = std::move(x);
  report.value = fx;
  report.grad_norm = gnorm;
  report.iterations = iter;
  report.achieved_bound = gnorm / mu;
  report.converged = report.achieved_bound <= eps;
  return report;
}

CgReport cg_solve(const LinearOperator& apply_A, const Vector& b, const Vector& q0, double eps, int max_iters) {
  if (!(eps > 0.0)) throw std::invalid_argument("cg_solve: eps must be positive");
  if (q0.size() != b.size()) throw std::invalid_argument("cg_solve: q0 and b differ in length");

  Vector q = q0;
  auto apply = [&](const Vector& v) {
    Vector out = apply_A(v);
    require_finite(out, "linear operator output");
    return out;
  };

  Vector r = b - apply(q);
  double rr = r.squaredNorm();
  Vector p = r;
  int iter = 0;

  while (iter < max_iters) {
    if (std::sqrt(rr) <= eps) {
      // Guard against drift of the recursive residual before stopping.
      r = b - apply(q);
      rr = r.squaredNorm();
      if (std::sqrt(rr) <= eps) break;
      p = r;
    }
    const Vector Ap = apply(p);
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) break;  // operator not positive definite along p
    const double alpha = rr / pAp;
    q += alpha * p;
    r -= alpha * Ap;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
    ++iter;
  }

  CgReport report;
  report.residual_norm = (apply(q) - b).norm();
  report.q = std::move(q);
  report.iterations = iter;
  report.converged = report.residual_norm <= eps;
  return report;
}

}  // namespace hoag
