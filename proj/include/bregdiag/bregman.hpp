#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "bregdiag/types.hpp"

namespace bregdiag {

/// Density values below this are rejected rather than propagated as inf.
inline constexpr double kMinDensity = 1e-300;

namespace detail {

[[noreturn]] inline void throw_nonpositive(const char* fn, double x) {
  throw std::domain_error(std::string(fn) + ": argument must be positive, got " +
                          std::to_string(x));
}

}  // namespace detail

/// Convex generator psi_alpha. alpha = 0 is Itakura-Saito, alpha = 1 is
/// Kullback-Leibler, alpha = 2 is half squared Euclidean. psi_alpha(x) >= 0
/// with equality iff x = 1.
template <typename Scalar>
Scalar psi_alpha(Scalar x, Scalar alpha) {
  if (!(x >= Scalar(kMinDensity))) detail::throw_nonpositive("psi_alpha", static_cast<double>(x));
  if (alpha == Scalar(1)) return x * std::log(x) - x + Scalar(1);
  if (alpha == Scalar(0)) return -std::log(x) + x - Scalar(1);
  // (x^a - a x + a - 1) / (a^2 - a), written via expm1 so the removable
  // singularities at a = 0 and a = 1 stay well conditioned
  const Scalar lx = std::log(x);
  if (std::abs(alpha - Scalar(1)) <= std::abs(alpha)) {
    const Scalar num = x * std::expm1((alpha - Scalar(1)) * lx) - (alpha - Scalar(1)) * (x - Scalar(1));
    return num / (alpha * (alpha - Scalar(1)));
  }
  const Scalar num = std::expm1(alpha * lx) - alpha * (x - Scalar(1));
  return num / (alpha * (alpha - Scalar(1)));
}

/// Derivative of psi_alpha; strictly increasing in x for every alpha.
template <typename Scalar>
Scalar psi_alpha_prime(Scalar x, Scalar alpha) {
  if (!(x >= Scalar(kMinDensity)))
    detail::throw_nonpositive("psi_alpha_prime", static_cast<double>(x));
  if (alpha == Scalar(1)) return std::log(x);
  if (alpha == Scalar(0)) return Scalar(1) - Scalar(1) / x;
  return std::expm1((alpha - Scalar(1)) * std::log(x)) / (alpha - Scalar(1));
}

struct ConvexFamilyParam {
  double alpha = 1.0;  // KL by default
};

/// One quadrature node: density values of the two functions and the measure
/// weight dnu at that point. f2 must be positive (psi' is evaluated there);
/// f1 may be zero when psi_alpha(0+) is finite (alpha > 0).
struct DensityPair {
  double f1 = 0.0;
  double f2 = 0.0;
  double weight = 1.0;
};

/// Bregman integrand weight * [psi(f1) - psi(f2) - psi'(f2)(f1 - f2)].
template <typename Scalar>
Scalar bregman_pointwise(Scalar f1, Scalar f2, Scalar weight, Scalar alpha) {
  if (!(f2 >= Scalar(kMinDensity)))
    detail::throw_nonpositive("bregman_pointwise: f2", static_cast<double>(f2));
  if (f1 < Scalar(0)) detail::throw_nonpositive("bregman_pointwise: f1", static_cast<double>(f1));
  Scalar psi_f1;
  if (f1 < Scalar(kMinDensity)) {
    // right limit of psi_alpha at 0: 1/alpha for alpha > 0, +inf otherwise
    if (!(alpha > Scalar(0)))
      throw std::domain_error("bregman_pointwise: f1 ~ 0 with alpha <= 0 diverges");
    psi_f1 = Scalar(1) / alpha;
    f1 = Scalar(0);
  } else {
    psi_f1 = psi_alpha(f1, alpha);
  }
  return weight * (psi_f1 - psi_alpha(f2, alpha) - psi_alpha_prime(f2, alpha) * (f1 - f2));
}

inline double bregman_pointwise(const DensityPair& pair, double alpha) {
  return bregman_pointwise(pair.f1, pair.f2, pair.weight, alpha);
}

/// Deterministic-quadrature Bregman divergence over a grid of density values.
/// Serves as the test oracle for the Monte Carlo estimators.
inline double bregman_quadrature(ConstVectorRef f1, ConstVectorRef f2, ConstVectorRef weights,
                                 double alpha) {
  if (f1.size() != f2.size() || f1.size() != weights.size())
    throw std::invalid_argument("bregman_quadrature: grid length mismatch");
  double total = 0.0;
  for (Index i = 0; i < f1.size(); ++i)
    total += bregman_pointwise(f1[i], f2[i], weights[i], alpha);
  return total;
}

/// Trapezoid weights for an increasing grid of abscissae.
inline Vector trapezoid_weights(ConstVectorRef x) {
  const Index n = x.size();
  if (n < 2) throw std::invalid_argument("trapezoid_weights: need at least 2 points");
  Vector w = Vector::Zero(n);
  for (Index i = 0; i + 1 < n; ++i) {
    const double h = 0.5 * (x[i + 1] - x[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

}  // namespace bregdiag
