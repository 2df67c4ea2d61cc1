#include "hoag/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hoag {

bool all_finite(const Vector& v) { return v.allFinite(); }

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NonFiniteError(std::string("non-finite ") + what);
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NonFiniteError(std::string("non-finite ") + what);
}

BoxDomain::BoxDomain(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0)
    throw std::invalid_argument("box bounds must be non-empty and of equal length");
  if (!lower_.allFinite() || !upper_.allFinite())
    throw std::invalid_argument("box bounds must be finite");
  if ((lower_.array() > upper_.array()).any())
    throw std::invalid_argument("box lower bound exceeds upper bound");
}

BoxDomain BoxDomain::symmetric(Index dim, double bound) {
  return BoxDomain(Vector::Constant(dim, -bound), Vector::Constant(dim, bound));
}

bool BoxDomain::contains(const Vector& point) const {
  return point.size() == dim() && (point.array() >= lower_.array()).all() &&
         (point.array() <= upper_.array()).all();
}

Vector BoxDomain::project(const Vector& point) const {
  if (point.size() != dim()) throw std::invalid_argument("projection: dimension mismatch");
  return point.cwiseMax(lower_).cwiseMin(upper_);
}

Vector project_box(const BoxDomain& domain, const Vector& point) { return domain.project(point); }

const char* to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::quadratic: return "quadratic";
    case ScheduleKind::cubic: return "cubic";
    case ScheduleKind::exponential: return "exponential";
    case ScheduleKind::exact: return "exact";
  }
  return "unknown";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "quadratic") return ScheduleKind::quadratic;
  if (name == "cubic") return ScheduleKind::cubic;
  if (name == "exponential") return ScheduleKind::exponential;
  if (name == "exact") return ScheduleKind::exact;
  throw std::invalid_argument("unknown schedule: " + name);
}

void ToleranceSchedule::validate() const {
  if (!(scale > 0.0) || !(floor > 0.0)) throw std::invalid_argument("schedule scale and floor must be positive");
  if (kind == ScheduleKind::exponential && !(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("exponential ratio must lie in (0, 1)");
}

double ToleranceSchedule::raw(std::int64_t k) const {
  if (k < 1) throw std::invalid_argument("tolerance index starts at 1");
  const auto kd = static_cast<double>(k);
  switch (kind) {
    case ScheduleKind::quadratic: return scale / (kd * kd);
    case ScheduleKind::cubic: return scale / (kd * kd * kd);
    case ScheduleKind::exponential: return scale * std::pow(ratio, kd - exponent_offset);
    case ScheduleKind::exact: return floor;
  }
  return floor;
}

double ToleranceSchedule::at(std::int64_t k) const { return std::max(floor, raw(k)); }

double tolerance_at(const ToleranceSchedule& schedule, std::int64_t k) { return schedule.at(k); }

LinearOperator BilevelProblem::hessian_operator(const Vector& x, const Vector& lambda) const {
  return [this, x, lambda](const Vector& v) { return hessian_vec(x, lambda, v); };
}

}  // namespace hoag
