#pragma once

#include <Eigen/Dense>

#include "hoag/core.hpp"
#include "hoag/experiment.hpp"

namespace fixture {

/// h = 1/2 x^T A x - b^T x with a known minimizer; g = 1/2 ||x - t||^2.
/// The hyperparameter scales nothing, so the problem only exercises solvers.
class Quadratic final : public hoag::BilevelProblem {
 public:
  Quadratic(Eigen::MatrixXd a, Eigen::VectorXd b, bool route_to_cg = false)
      : a_(std::move(a)), b_(std::move(b)), t_(Eigen::VectorXd::Zero(b_.size())), route_to_cg_(route_to_cg) {
    mu_ = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a_).eigenvalues().minCoeff();
  }

  Eigen::VectorXd minimizer() const { return a_.ldlt().solve(b_); }

  hoag::Index hyper_dim() const override { return 1; }
  hoag::Index param_dim() const override { return b_.size(); }
  double inner_loss(const hoag::Vector& x, const hoag::Vector&) const override {
    return 0.5 * x.dot(a_ * x) - b_.dot(x);
  }
  hoag::Vector inner_grad(const hoag::Vector& x, const hoag::Vector&) const override { return a_ * x - b_; }
  hoag::Vector hessian_vec(const hoag::Vector&, const hoag::Vector&, const hoag::Vector& v) const override {
    return a_ * v;
  }
  hoag::Vector cross_vec(const hoag::Vector&, const hoag::Vector&, const hoag::Vector&) const override {
    return hoag::Vector::Zero(1);
  }
  double outer_loss(const hoag::Vector& x, const hoag::Vector&) const override { return 0.5 * (x - t_).squaredNorm(); }
  hoag::Vector outer_grad_params(const hoag::Vector& x, const hoag::Vector&) const override { return x - t_; }
  hoag::Vector outer_grad_hyper(const hoag::Vector&, const hoag::Vector&) const override {
    return hoag::Vector::Zero(1);
  }
  double strong_convexity(const hoag::Vector&) const override { return mu_; }
  double outer_lipschitz(const hoag::Vector&) const override { return 1.0; }
  bool inner_is_quadratic() const override { return route_to_cg_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  Eigen::VectorXd t_;
  double mu_ = 0.0;
  bool route_to_cg_;
};

inline hoag::cli::RunSpec synthetic_spec(const std::string& problem, hoag::Index n, hoag::Index p,
                                         std::uint64_t seed = 0, hoag::Index classes = 0) {
  hoag::cli::RunSpec spec;
  spec.problem = problem;
  spec.synthetic = hoag::cli::SyntheticSpec{n, p, classes};
  spec.seed = seed;
  return spec;
}

}  // namespace fixture
