#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bregdiag/types.hpp"

namespace bregdiag {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

/// log(1 + exp(x)) without overflow for large |x|.
inline double log1p_exp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// log sum_i exp(x_i), max-shifted. Empty input is -inf.
inline double log_sum_exp(ConstVectorRef x) {
  if (x.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.array() - m).exp().sum());
}

inline double log_normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * kLogTwoPi - std::log(sd) - 0.5 * z * z;
}

/// Gamma(shape, rate) log density at x > 0.
inline double log_gamma_pdf(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

inline double log_beta_pdf(double x, double a, double b) {
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) +
         (b - 1.0) * std::log1p(-x);
}

inline double log_cauchy_pdf(double x, double loc, double scale) {
  const double z = (x - loc) / scale;
  return -std::log(M_PI * scale) - std::log1p(z * z);
}

/// Student-t with nu dof, location 0, scale sigma (plain scaling, not
/// variance-standardized; converges to N(0, sigma^2) as nu grows).
inline double log_student_t_pdf(double x, double nu, double sigma) {
  const double z = x / sigma;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * M_PI) -
         std::log(sigma) - 0.5 * (nu + 1.0) * std::log1p(z * z / nu);
}

/// Sample standard deviation (n-1 denominator).
inline double sample_sd(ConstVectorRef y) {
  const Index n = y.size();
  if (n < 2) throw std::invalid_argument("sample_sd: need at least 2 values");
  const double mean = y.mean();
  return std::sqrt((y.array() - mean).square().sum() / static_cast<double>(n - 1));
}

}  // namespace bregdiag
