#include <cmath>
#include <stdexcept>

#include "hoag/problems.hpp"

namespace hoag {
namespace {

DenseMatrix pairwise_distances(const DenseMatrix& rows, const DenseMatrix& cols, bool squared) {
  DenseMatrix d(rows.rows(), cols.rows());
  for (Index i = 0; i < rows.rows(); ++i)
    for (Index j = 0; j < cols.rows(); ++j) {
      const double sq = (rows.row(i) - cols.row(j)).squaredNorm();
      d(i, j) = squared ? sq : std::sqrt(sq);
    }
  return d;
}

// d/dlambda1 of exp(-e^lambda1 D) is -e^lambda1 D .* K.
DenseMatrix kernel_derivative(const DenseMatrix& distances, const DenseMatrix& kernel, double log_gamma) {
  return -std::exp(log_gamma) * distances.cwiseProduct(kernel);
}

}  // namespace

KernelRidgeProblem::KernelRidgeProblem(const Dataset& train, const Dataset& test, bool squared_distance)
    : train_targets_(train.targets), test_targets_(test.targets), feature_count_(train.feature_count()) {
  if (train.feature_count() != test.feature_count())
    throw std::invalid_argument("kernel ridge: train and test feature counts differ");
  const DenseMatrix a = train.features.to_dense();
  const DenseMatrix a_test = test.features.to_dense();
  train_dist_ = pairwise_distances(a, a, squared_distance);
  train_dist_.diagonal().setZero();
  test_dist_ = pairwise_distances(a_test, a, squared_distance);
}

DenseMatrix KernelRidgeProblem::kernel(const DenseMatrix& distances, double log_gamma) const {
  return (-std::exp(log_gamma) * distances).array().exp().matrix();
}

double KernelRidgeProblem::inner_loss(const Vector& x, const Vector& lambda) const {
  const DenseMatrix k = kernel(train_dist_, lambda[0]);
  return 0.5 * x.dot(k * x) + 0.5 * std::exp(lambda[1]) * x.squaredNorm() - train_targets_.dot(x);
}

Vector KernelRidgeProblem::inner_grad(const Vector& x, const Vector& lambda) const {
  return kernel(train_dist_, lambda[0]) * x + std::exp(lambda[1]) * x - train_targets_;
}

Vector KernelRidgeProblem::hessian_vec(const Vector&, const Vector& lambda, const Vector& v) const {
  return kernel(train_dist_, lambda[0]) * v + std::exp(lambda[1]) * v;
}

LinearOperator KernelRidgeProblem::hessian_operator(const Vector&, const Vector& lambda) const {
  return [k = kernel(train_dist_, lambda[0]), reg = std::exp(lambda[1])](const Vector& v) -> Vector {
    return k * v + reg * v;
  };
}

Vector KernelRidgeProblem::cross_vec(const Vector& x, const Vector& lambda, const Vector& v) const {
  const DenseMatrix k = kernel(train_dist_, lambda[0]);
  const DenseMatrix dk = kernel_derivative(train_dist_, k, lambda[0]);
  Vector out(2);
  out[0] = v.dot(dk * x);
  out[1] = std::exp(lambda[1]) * x.dot(v);
  return out;
}

double KernelRidgeProblem::outer_loss(const Vector& x, const Vector& lambda) const {
  return (test_targets_ - kernel(test_dist_, lambda[0]) * x).squaredNorm();
}

Vector KernelRidgeProblem::outer_grad_params(const Vector& x, const Vector& lambda) const {
  const DenseMatrix k = kernel(test_dist_, lambda[0]);
  return -2.0 * (k.transpose() * (test_targets_ - k * x));
}

Vector KernelRidgeProblem::outer_grad_hyper(const Vector& x, const Vector& lambda) const {
  const DenseMatrix k = kernel(test_dist_, lambda[0]);
  const Vector residual = test_targets_ - k * x;
  Vector out = Vector::Zero(2);
  out[0] = -2.0 * residual.dot(kernel_derivative(test_dist_, k, lambda[0]) * x);
  return out;
}

double KernelRidgeProblem::strong_convexity(const Vector& lambda) const { return std::exp(lambda[1]); }

double KernelRidgeProblem::outer_lipschitz(const Vector& lambda) const {
  const double k_norm = kernel(test_dist_, lambda[0]).norm();
  return 2.0 * k_norm * (test_targets_.norm() + k_norm * train_targets_.norm() / strong_convexity(lambda));
}

Vector KernelRidgeProblem::default_lambda() const {
  Vector out(2);
  out << -std::log(static_cast<double>(feature_count_)), 0.0;
  return out;
}

}  // namespace hoag
