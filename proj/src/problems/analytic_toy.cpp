#include <cmath>
#include <stdexcept>

#include "hoag/problems.hpp"

namespace hoag {

AnalyticToyProblem::AnalyticToyProblem(Vector c, Vector d) : c_(std::move(c)), d_(std::move(d)) {
  if (c_.size() < 1 || c_.size() != d_.size()) throw std::invalid_argument("toy problem: c and d must match, p >= 1");
}

AnalyticToyProblem::Reference AnalyticToyProblem::reference(double lambda) const {
  const double e = std::exp(lambda);
  Reference ref;
  ref.solution = c_ / (1.0 + e);
  const Vector residual = ref.solution - d_;
  ref.value = 0.5 * residual.squaredNorm();
  ref.gradient = residual.dot(-c_ * (e / ((1.0 + e) * (1.0 + e))));
  return ref;
}

double AnalyticToyProblem::inner_loss(const Vector& x, const Vector& lambda) const {
  return 0.5 * (x - c_).squaredNorm() + 0.5 * std::exp(lambda[0]) * x.squaredNorm();
}

Vector AnalyticToyProblem::inner_grad(const Vector& x, const Vector& lambda) const {
  return x - c_ + std::exp(lambda[0]) * x;
}

Vector AnalyticToyProblem::hessian_vec(const Vector&, const Vector& lambda, const Vector& v) const {
  return (1.0 + std::exp(lambda[0])) * v;
}

Vector AnalyticToyProblem::cross_vec(const Vector& x, const Vector& lambda, const Vector& v) const {
  return Vector::Constant(1, std::exp(lambda[0]) * x.dot(v));
}

double AnalyticToyProblem::outer_loss(const Vector& x, const Vector&) const { return 0.5 * (x - d_).squaredNorm(); }

Vector AnalyticToyProblem::outer_grad_params(const Vector& x, const Vector&) const { return x - d_; }

Vector AnalyticToyProblem::outer_grad_hyper(const Vector&, const Vector&) const { return Vector::Zero(1); }

double AnalyticToyProblem::strong_convexity(const Vector& lambda) const { return 1.0 + std::exp(lambda[0]); }

double AnalyticToyProblem::outer_lipschitz(const Vector&) const { return c_.norm() + d_.norm(); }

}  // namespace hoag
