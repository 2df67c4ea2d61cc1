#include <cmath>
#include <stdexcept>

#include "hoag/problems.hpp"

namespace hoag {
namespace {

// Row-wise softmax with max subtraction.
DenseMatrix softmax_rows(const DenseMatrix& scores) {
  DenseMatrix p(scores.rows(), scores.cols());
  for (Index i = 0; i < scores.rows(); ++i) {
    const double top = scores.row(i).maxCoeff();
    p.row(i) = (scores.row(i).array() - top).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

void check_labels(const Dataset& data, Index classes) {
  for (Index i = 0; i < data.size(); ++i) {
    const double y = data.targets[i];
    if (y < 0 || y >= static_cast<double>(classes) || y != std::floor(y))
      throw std::invalid_argument("multiclass labels must be integers in [0, classes)");
  }
}

// vec(A^T (softmax(A W) - Y))
Vector loss_gradient(const Dataset& data, const DenseMatrix& weights) {
  DenseMatrix residual = softmax_rows(data.features.multiply(weights));
  for (Index i = 0; i < data.size(); ++i) residual(i, static_cast<Index>(data.targets[i])) -= 1.0;
  const DenseMatrix g = data.features.multiply_transpose(residual);
  return Eigen::Map<const Vector>(g.data(), g.size());
}

}  // namespace

double multinomial_loss(const DenseMatrix& scores, const Vector& labels) {
  double total = 0.0;
  for (Index i = 0; i < scores.rows(); ++i) {
    const double top = scores.row(i).maxCoeff();
    const double lse = top + std::log((scores.row(i).array() - top).exp().sum());
    total += lse - scores(i, static_cast<Index>(labels[i]));
  }
  return total;
}

MultiFeatureRegLogisticProblem::MultiFeatureRegLogisticProblem(Dataset train, Dataset test, Index classes)
    : train_(std::move(train)), test_(std::move(test)), classes_(classes) {
  if (classes_ < 2) throw std::invalid_argument("multinomial problem needs at least 2 classes");
  if (train_.feature_count() != test_.feature_count())
    throw std::invalid_argument("multinomial problem: train and test feature counts differ");
  check_labels(train_, classes_);
  check_labels(test_, classes_);
  lipschitz_ = 0.0;
  for (Index i = 0; i < test_.size(); ++i) lipschitz_ += test_.features.row_norm(i);
  lipschitz_ *= std::sqrt(2.0);
}

namespace {
Eigen::Map<const DenseMatrix> as_weights(const Vector& x, Index p, Index classes) {
  return Eigen::Map<const DenseMatrix>(x.data(), p, classes);
}
}  // namespace

double MultiFeatureRegLogisticProblem::inner_loss(const Vector& x, const Vector& lambda) const {
  const DenseMatrix w = as_weights(x, train_.feature_count(), classes_);
  return multinomial_loss(train_.features.multiply(w), train_.targets) +
         0.5 * (lambda.array().exp() * x.array().square()).sum();
}

Vector MultiFeatureRegLogisticProblem::inner_grad(const Vector& x, const Vector& lambda) const {
  const DenseMatrix w = as_weights(x, train_.feature_count(), classes_);
  return loss_gradient(train_, w) + (lambda.array().exp() * x.array()).matrix();
}

Vector MultiFeatureRegLogisticProblem::hessian_vec(const Vector& x, const Vector& lambda, const Vector& v) const {
  const Index p = train_.feature_count();
  const DenseMatrix probs = softmax_rows(train_.features.multiply(DenseMatrix(as_weights(x, p, classes_))));
  const DenseMatrix u = train_.features.multiply(DenseMatrix(as_weights(v, p, classes_)));
  // Per row: (diag(pi) - pi pi^T) u_i
  DenseMatrix r = probs.cwiseProduct(u);
  const Vector inner = r.rowwise().sum();
  r -= probs.cwiseProduct(inner.replicate(1, classes_));
  const DenseMatrix hv = train_.features.multiply_transpose(r);
  return Eigen::Map<const Vector>(hv.data(), hv.size()) + (lambda.array().exp() * v.array()).matrix();
}

Vector MultiFeatureRegLogisticProblem::cross_vec(const Vector& x, const Vector& lambda, const Vector& v) const {
  return (lambda.array().exp() * x.array() * v.array()).matrix();
}

double MultiFeatureRegLogisticProblem::outer_loss(const Vector& x, const Vector&) const {
  const DenseMatrix w = as_weights(x, test_.feature_count(), classes_);
  return multinomial_loss(test_.features.multiply(w), test_.targets);
}

Vector MultiFeatureRegLogisticProblem::outer_grad_params(const Vector& x, const Vector&) const {
  return loss_gradient(test_, as_weights(x, test_.feature_count(), classes_));
}

Vector MultiFeatureRegLogisticProblem::outer_grad_hyper(const Vector&, const Vector&) const {
  return Vector::Zero(hyper_dim());
}

double MultiFeatureRegLogisticProblem::strong_convexity(const Vector& lambda) const {
  return std::exp(lambda.minCoeff());
}

double MultiFeatureRegLogisticProblem::outer_lipschitz(const Vector&) const { return lipschitz_; }

}  // namespace hoag
