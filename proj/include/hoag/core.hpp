#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hoag {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Point in the hyperparameter domain (the outer variable).
using HyperParams = Eigen::VectorXd;
/// Inner variable (model coefficients).
using ModelParams = Eigen::VectorXd;

/// Matrix-free linear map on length-p vectors.
using LinearOperator = std::function<Vector(const Vector&)>;

inline constexpr double kDefaultDomainBound = 12.0;
inline constexpr double kDefaultToleranceFloor = 1e-12;
inline constexpr double kDefaultToleranceScale = 0.1;
inline constexpr double kDefaultExponentialRatio = 0.9;
inline constexpr int kDefaultInnerMaxIters = 100;

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// True if every entry is finite.
bool all_finite(const Vector& v);

/// Throws NonFiniteError naming `what` unless `v` is finite.
void require_finite(const Vector& v, const char* what);
void require_finite(double v, const char* what);

/// Axis-aligned box; the only constraint set shipped.
class BoxDomain {
 public:
  BoxDomain(Vector lower, Vector upper);

  /// [-bound, bound]^dim.
  static BoxDomain symmetric(Index dim, double bound = kDefaultDomainBound);

  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Index dim() const { return lower_.size(); }

  bool contains(const Vector& point) const;
  Vector project(const Vector& point) const;

 private:
  Vector lower_;
  Vector upper_;
};

/// Euclidean projection onto the box (per-coordinate clamp).
Vector project_box(const BoxDomain& domain, const Vector& point);

enum class ScheduleKind { quadratic, cubic, exponential, exact };

const char* to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

/// Summable tolerance sequence eps_k, floored at `floor`.
///
/// With the default offset of 1 the exponential kind reads c * ratio^(k-1),
/// so every decreasing kind starts at eps_1 = c. Setting the offset to 0
/// gives c * ratio^k.
struct ToleranceSchedule {
  ScheduleKind kind = ScheduleKind::exponential;
  double scale = kDefaultToleranceScale;
  double ratio = kDefaultExponentialRatio;
  double floor = kDefaultToleranceFloor;
  int exponent_offset = 1;

  /// Un-floored term. `k` must be >= 1.
  double raw(std::int64_t k) const;
  double at(std::int64_t k) const;
  void validate() const;
};

double tolerance_at(const ToleranceSchedule& schedule, std::int64_t k);

/// Oracle interface of a bilevel problem
///
///   min_{lambda in D} g(X(lambda), lambda)  s.t.  X(lambda) = argmin_x h(x, lambda).
///
/// Every method is evaluated at a given (x, lambda) and must be free of hidden
/// mutable state so one instance can serve concurrent runs.
class BilevelProblem {
 public:
  virtual ~BilevelProblem() = default;

  virtual Index hyper_dim() const = 0;
  virtual Index param_dim() const = 0;

  virtual double inner_loss(const Vector& x, const Vector& lambda) const = 0;
  virtual Vector inner_grad(const Vector& x, const Vector& lambda) const = 0;
  /// Hessian of h in x applied to v.
  virtual Vector hessian_vec(const Vector& x, const Vector& lambda, const Vector& v) const = 0;
  /// Transposed cross derivative (d/dlambda grad_x h)^T v, length s.
  virtual Vector cross_vec(const Vector& x, const Vector& lambda, const Vector& v) const = 0;

  virtual double outer_loss(const Vector& x, const Vector& lambda) const = 0;
  virtual Vector outer_grad_params(const Vector& x, const Vector& lambda) const = 0;
  virtual Vector outer_grad_hyper(const Vector& x, const Vector& lambda) const = 0;

  /// Lower bound on the smallest eigenvalue of the inner Hessian.
  virtual double strong_convexity(const Vector& lambda) const = 0;
  /// Lipschitz constant of g(., lambda) over the region holding the inner iterates.
  virtual double outer_lipschitz(const Vector& lambda) const = 0;

  /// Per-coordinate starting point for gradient-based methods.
  virtual Vector default_lambda() const { return Vector::Zero(hyper_dim()); }

  /// Quadratic inner problems, h = 1/2 x^T A x - b^T x, are solved by CG.
  virtual bool inner_is_quadratic() const { return false; }

  /// Hessian operator at (x, lambda). Implementations may precompute
  /// lambda-dependent data here; the default defers to hessian_vec.
  virtual LinearOperator hessian_operator(const Vector& x, const Vector& lambda) const;
};

/// One line of an optimization trace. Counters and wall_time are cumulative.
/// grad_norm and step_size are NaN for gradient-free methods.
struct TraceRecord {
  std::int64_t k = 0;
  Vector lambda;
  double epsilon = 0.0;
  double outer_value = 0.0;
  double grad_norm = 0.0;
  double step_size = 0.0;
  std::int64_t inner_iters = 0;
  std::int64_t cg_iters = 0;
  double wall_time = 0.0;
};

using TraceSink = std::function<void(const TraceRecord&)>;

}  // namespace hoag
