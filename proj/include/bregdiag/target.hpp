#pragma once

#include <vector>

#include "bregdiag/types.hpp"

namespace bregdiag {

/// Unnormalized log density -U(theta) and its gradient on an unconstrained
/// space. Implementations must be safely shareable read-only across threads.
class TargetDensity {
 public:
  virtual ~TargetDensity() = default;
  virtual int dim() const = 0;
  virtual double log_density(const Vector& theta) const = 0;
  virtual Vector grad_log_density(const Vector& theta) const = 0;
};

/// Max relative discrepancy between the analytic gradient and central finite
/// differences with h = 1e-5 * (1 + |theta_j|), over the given points.
double gradient_check(const TargetDensity& target, const std::vector<Vector>& points);

}  // namespace bregdiag
