#pragma once

#include "hoag/core.hpp"
#include "hoag/dataio.hpp"

namespace hoag {

/// Closed-form test problem with scalar lambda:
///
///   h(x, lambda) = 1/2 ||x - c||^2 + 1/2 e^lambda ||x||^2,   g(x) = 1/2 ||x - d||^2,
///
/// so X(lambda) = c / (1 + e^lambda).
class AnalyticToyProblem final : public BilevelProblem {
 public:
  AnalyticToyProblem(Vector c, Vector d);

  struct Reference {
    Vector solution;
    double value;
    double gradient;
  };
  /// X(lambda), f(lambda) and f'(lambda) from the closed forms.
  Reference reference(double lambda) const;

  const Vector& c() const { return c_; }
  const Vector& d() const { return d_; }

  Index hyper_dim() const override { return 1; }
  Index param_dim() const override { return c_.size(); }
  double inner_loss(const Vector& x, const Vector& lambda) const override;
  Vector inner_grad(const Vector& x, const Vector& lambda) const override;
  Vector hessian_vec(const Vector& x, const Vector& lambda, const Vector& v) const override;
  Vector cross_vec(const Vector& x, const Vector& lambda, const Vector& v) const override;
  double outer_loss(const Vector& x, const Vector& lambda) const override;
  Vector outer_grad_params(const Vector& x, const Vector& lambda) const override;
  Vector outer_grad_hyper(const Vector& x, const Vector& lambda) const override;
  /// 1 + e^lambda
  double strong_convexity(const Vector& lambda) const override;
  /// ||c|| + ||d||: ||grad g|| = ||x - d|| and iterates stay between 0 and c.
  double outer_lipschitz(const Vector& lambda) const override;

 private:
  Vector c_;
  Vector d_;
};

/// Logistic loss psi(t) = log(1 + e^-t), evaluated without overflow.
double logistic_loss(double t);
/// psi'(t) = -1 / (1 + e^t)
double logistic_loss_derivative(double t);
/// psi''(t) = sigma(t) sigma(-t)
double logistic_loss_second_derivative(double t);

/// l2-regularized logistic regression with one hyperparameter:
///
///   h = sum_i psi(b_i a_i^T x) + e^lambda ||x||^2  (train),   g = sum_i psi(b'_i a'_i^T x)  (test).
class LogisticL2Problem final : public BilevelProblem {
 public:
  LogisticL2Problem(Dataset train, Dataset test);

  Index hyper_dim() const override { return 1; }
  Index param_dim() const override { return train_.feature_count(); }
  double inner_loss(const Vector& x, const Vector& lambda) const override;
  Vector inner_grad(const Vector& x, const Vector& lambda) const override;
  Vector hessian_vec(const Vector& x, const Vector& lambda, const Vector& v) const override;
  Vector cross_vec(const Vector& x, const Vector& lambda, const Vector& v) const override;
  double outer_loss(const Vector& x, const Vector& lambda) const override;
  Vector outer_grad_params(const Vector& x, const Vector& lambda) const override;
  Vector outer_grad_hyper(const Vector& x, const Vector& lambda) const override;
  /// 2 e^lambda, the penalty curvature (the loss Hessian is PSD).
  double strong_convexity(const Vector& lambda) const override;
  /// sum_i ||a'_i||, since |psi'| <= 1.
  double outer_lipschitz(const Vector& lambda) const override;

  const Dataset& train() const { return train_; }
  const Dataset& test() const { return test_; }

 private:
  Dataset train_;
  Dataset test_;
  double lipschitz_;
};

/// Kernel ridge regression with an exponential RBF kernel
/// k(a, a', gamma) = exp(-gamma ||a - a'||) and lambda = (log gamma, log reg):
///
///   h = 1/2 x^T (K_train + e^lambda2 I) x - b^T x,   g = ||b' - K_test x||^2.
///
/// `squared_distance` switches to exp(-gamma ||a - a'||^2).
class KernelRidgeProblem final : public BilevelProblem {
 public:
  KernelRidgeProblem(const Dataset& train, const Dataset& test, bool squared_distance = false);

  /// exp(-e^lambda1 * D) for the given distance matrix.
  DenseMatrix kernel(const DenseMatrix& distances, double log_gamma) const;
  const DenseMatrix& train_distances() const { return train_dist_; }
  const DenseMatrix& test_distances() const { return test_dist_; }

  Index hyper_dim() const override { return 2; }
  Index param_dim() const override { return train_targets_.size(); }
  double inner_loss(const Vector& x, const Vector& lambda) const override;
  Vector inner_grad(const Vector& x, const Vector& lambda) const override;
  Vector hessian_vec(const Vector& x, const Vector& lambda, const Vector& v) const override;
  Vector cross_vec(const Vector& x, const Vector& lambda, const Vector& v) const override;
  double outer_loss(const Vector& x, const Vector& lambda) const override;
  Vector outer_grad_params(const Vector& x, const Vector& lambda) const override;
  Vector outer_grad_hyper(const Vector& x, const Vector& lambda) const override;
  /// e^lambda2; the kernel matrix is positive semidefinite.
  double strong_convexity(const Vector& lambda) const override;
  /// 2 ||K_test||_F (||b'|| + ||K_test||_F ||b|| / mu): a bound on ||grad_x g||
  /// over the ball ||x|| <= ||b|| / mu that holds X(lambda).
  double outer_lipschitz(const Vector& lambda) const override;
  /// (-log n_features, 0)
  Vector default_lambda() const override;
  bool inner_is_quadratic() const override { return true; }
  LinearOperator hessian_operator(const Vector& x, const Vector& lambda) const override;

 private:
  DenseMatrix train_dist_;  // n x n
  DenseMatrix test_dist_;   // m x n
  Vector train_targets_;
  Vector test_targets_;
  Index feature_count_;
};

/// Multinomial logistic regression with one regularization constant per
/// weight. Weights are stored column-major as a p x K matrix, x[j + p * k].
///
///   h = sum_i psi(b_i, a_i^T W) + 1/2 sum_j e^lambda_j x_j^2,   g = sum_i psi(b'_i, a'_i^T W).
class MultiFeatureRegLogisticProblem final : public BilevelProblem {
 public:
  /// Targets hold 0-based class indices below `classes`.
  MultiFeatureRegLogisticProblem(Dataset train, Dataset test, Index classes);

  Index classes() const { return classes_; }

  Index hyper_dim() const override { return param_dim(); }
  Index param_dim() const override { return train_.feature_count() * classes_; }
  double inner_loss(const Vector& x, const Vector& lambda) const override;
  Vector inner_grad(const Vector& x, const Vector& lambda) const override;
  Vector hessian_vec(const Vector& x, const Vector& lambda, const Vector& v) const override;
  Vector cross_vec(const Vector& x, const Vector& lambda, const Vector& v) const override;
  double outer_loss(const Vector& x, const Vector& lambda) const override;
  Vector outer_grad_params(const Vector& x, const Vector& lambda) const override;
  Vector outer_grad_hyper(const Vector& x, const Vector& lambda) const override;
  /// min_j e^lambda_j
  double strong_convexity(const Vector& lambda) const override;
  /// sqrt(2) sum_i ||a'_i||: the multinomial loss is sqrt(2)-Lipschitz in the scores.
  double outer_lipschitz(const Vector& lambda) const override;

 private:
  Dataset train_;
  Dataset test_;
  Index classes_;
  double lipschitz_;
};

/// Summed multinomial loss psi(b, z) = logsumexp(z) - z_b over the rows of
/// `scores`, with `labels` holding class indices.
double multinomial_loss(const DenseMatrix& scores, const Vector& labels);

}  // namespace hoag
