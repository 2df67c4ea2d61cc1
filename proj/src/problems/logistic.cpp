#include <cmath>
#include <stdexcept>

#include "hoag/problems.hpp"

namespace hoag {

double logistic_loss(double t) {
  if (t >= 0.0) return std::log1p(std::exp(-t));
  return -t + std::log1p(std::exp(t));
}

double logistic_loss_derivative(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(t));
}

double logistic_loss_second_derivative(double t) {
  const double e = std::exp(-std::abs(t));
  return e / ((1.0 + e) * (1.0 + e));
}

namespace {

void check_binary(const Dataset& data, const char* which) {
  for (Index i = 0; i < data.size(); ++i)
    if (data.targets[i] != 1.0 && data.targets[i] != -1.0)
      throw std::invalid_argument(std::string(which) + " labels must be +1 or -1");
}

Vector margins(const Dataset& data, const Vector& x) {
  return data.targets.cwiseProduct(data.features.multiply(x));
}

double summed_loss(const Vector& m) {
  double total = 0.0;
  for (Index i = 0; i < m.size(); ++i) total += logistic_loss(m[i]);
  return total;
}

// sum_i b_i a_i psi'(m_i)
Vector loss_gradient(const Dataset& data, const Vector& m) {
  Vector w = m.unaryExpr([](double t) { return logistic_loss_derivative(t); });
  return data.features.multiply_transpose(Vector(data.targets.cwiseProduct(w)));
}

}  // namespace

LogisticL2Problem::LogisticL2Problem(Dataset train, Dataset test) : train_(std::move(train)), test_(std::move(test)) {
  if (train_.feature_count() != test_.feature_count())
    throw std::invalid_argument("logistic problem: train and test feature counts differ");
  check_binary(train_, "train");
  check_binary(test_, "test");
  lipschitz_ = 0.0;
  for (Index i = 0; i < test_.size(); ++i) lipschitz_ += test_.features.row_norm(i);
}

double LogisticL2Problem::inner_loss(const Vector& x, const Vector& lambda) const {
  return summed_loss(margins(train_, x)) + std::exp(lambda[0]) * x.squaredNorm();
}

Vector LogisticL2Problem::inner_grad(const Vector& x, const Vector& lambda) const {
  return loss_gradient(train_, margins(train_, x)) + 2.0 * std::exp(lambda[0]) * x;
}

Vector LogisticL2Problem::hessian_vec(const Vector& x, const Vector& lambda, const Vector& v) const {
  const Vector curvature =
      margins(train_, x).unaryExpr([](double t) { return logistic_loss_second_derivative(t); });
  const Vector av = train_.features.multiply(v);
  return train_.features.multiply_transpose(Vector(curvature.cwiseProduct(av))) + 2.0 * std::exp(lambda[0]) * v;
}

Vector LogisticL2Problem::cross_vec(const Vector& x, const Vector& lambda, const Vector& v) const {
  return Vector::Constant(1, 2.0 * std::exp(lambda[0]) * x.dot(v));
}

double LogisticL2Problem::outer_loss(const Vector& x, const Vector&) const { return summed_loss(margins(test_, x)); }

Vector LogisticL2Problem::outer_grad_params(const Vector& x, const Vector&) const {
  return loss_gradient(test_, margins(test_, x));
}

Vector LogisticL2Problem::outer_grad_hyper(const Vector&, const Vector&) const { return Vector::Zero(1); }

double LogisticL2Problem::strong_convexity(const Vector& lambda) const { return 2.0 * std::exp(lambda[0]); }

double LogisticL2Problem::outer_lipschitz(const Vector&) const { return lipschitz_; }

}  // namespace hoag
