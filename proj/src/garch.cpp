#include "bregdiag/models/garch.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bregdiag/math.hpp"

namespace bregdiag {

Vector garch_volatility(double alpha0, double alpha1, double beta1, const Vector& y,
                        double sigma2_init) {
  if (alpha0 <= 0.0 || alpha1 < 0.0 || beta1 < 0.0)
    throw std::invalid_argument("garch_volatility: need alpha0 > 0, alpha1 >= 0, beta1 >= 0");
  if (sigma2_init <= 0.0)
    throw std::invalid_argument("garch_volatility: sigma2_init must be positive");
  const Index T = y.size();
  Vector sigma2(T);
  sigma2[0] = sigma2_init;
  for (Index t = 1; t < T; ++t)
    sigma2[t] = alpha0 + alpha1 * y[t - 1] * y[t - 1] + beta1 * sigma2[t - 1];
  return sigma2;
}

GarchModel::GarchModel(Vector returns, Priors priors)
    : GarchModel(std::move(returns), priors, Options{}) {}

GarchModel::GarchModel(Vector returns, Priors priors, Options opts)
    : y_(std::move(returns)), priors_(priors), opts_(opts) {
  if (y_.size() < 3) throw std::invalid_argument("GarchModel: need at least 3 observations");
  if (opts_.error_family == ErrorFamily::student_t && opts_.nu <= 2.0)
    throw std::invalid_argument("GarchModel: Student-t nu must exceed 2");
  const double mean = y_.mean();
  const double var = (y_.array() - mean).square().sum() / static_cast<double>(y_.size() - 1);
  sigma2_init_ = opts_.sigma2_init > 0.0 ? opts_.sigma2_init : var;
  if (sigma2_init_ <= 0.0) throw std::invalid_argument("GarchModel: degenerate series");
}

GarchModel::Priors GarchModel::preset_prior(int id) {
  switch (id) {
    case 1: return {0.1, 0.1, 2.0, 2.0, 2.0, 2.0};
    case 2: return {0.1, 0.1, 2.0, 3.0, 3.0, 2.0};
    case 3: return {0.5, 0.5, 2.0, 3.0, 3.0, 2.0};
    default: throw std::invalid_argument("GarchModel: prior id must be 1, 2 or 3");
  }
}

std::vector<std::string> GarchModel::param_names() const { return {"alpha0", "alpha1", "beta1"}; }

Vector GarchModel::to_natural(const Vector& u) const {
  Vector theta(3);
  theta[0] = std::exp(u[0]);
  theta[1] = sigmoid(u[1]);
  theta[2] = sigmoid(u[2]);
  return theta;
}

Vector GarchModel::to_unconstrained(const Vector& theta) const {
  Vector u(3);
  u[0] = std::log(theta[0]);
  u[1] = logit(theta[1]);
  u[2] = logit(theta[2]);
  return u;
}

double GarchModel::term_loglik(double y, double sigma2) const {
  if (opts_.error_family == ErrorFamily::normal)
    return -0.5 * (kLogTwoPi + std::log(sigma2)) - 0.5 * y * y / sigma2;
  return log_student_t_pdf(y, opts_.nu, std::sqrt(sigma2));
}

double GarchModel::dterm_dsigma2(double y, double sigma2) const {
  if (opts_.error_family == ErrorFamily::normal)
    return -0.5 / sigma2 + 0.5 * y * y / (sigma2 * sigma2);
  const double nu = opts_.nu;
  // d/dsigma2 of [-1/2 log sigma2 - (nu+1)/2 log(1 + y^2/(nu sigma2))]
  return -0.5 / sigma2 + 0.5 * (nu + 1.0) * y * y / (sigma2 * (nu * sigma2 + y * y));
}

double GarchModel::log_likelihood(const Vector& theta) const {
  const Vector sigma2 = garch_volatility(theta[0], theta[1], theta[2], y_, sigma2_init_);
  double ll = 0.0;
  for (Index t = 1; t < y_.size(); ++t) ll += term_loglik(y_[t], sigma2[t]);
  return ll;
}

double GarchModel::log_prior(const Vector& theta) const {
  return log_gamma_pdf(theta[0], priors_.a0_shape, priors_.a0_rate) +
         log_beta_pdf(theta[1], priors_.a1_a, priors_.a1_b) +
         log_beta_pdf(theta[2], priors_.b1_a, priors_.b1_b);
}

namespace {

/// Transform under/overflow makes the posterior density zero.
bool degenerate_natural(const Vector& theta) {
  return !(theta[0] > 1e-300) || !(theta[1] > 0.0) || !(theta[1] < 1.0) || !(theta[2] > 0.0) ||
         !(theta[2] < 1.0) || !std::isfinite(theta[0]);
}

}  // namespace

double GarchModel::log_density(const Vector& u) const {
  const Vector theta = to_natural(u);
  if (degenerate_natural(theta)) return -std::numeric_limits<double>::infinity();
  // Jacobians: exp for alpha0, logistic for alpha1/beta1
  const double log_jac = u[0] + std::log(theta[1]) + std::log1p(-theta[1]) +
                         std::log(theta[2]) + std::log1p(-theta[2]);
  return log_likelihood(theta) + log_prior(theta) + log_jac;
}

Vector GarchModel::grad_log_density(const Vector& u) const {
  const Vector theta = to_natural(u);
  if (degenerate_natural(theta))
    return Vector::Constant(3, std::numeric_limits<double>::quiet_NaN());
  const double a0 = theta[0], a1 = theta[1], b1 = theta[2];
  const Index T = y_.size();
  const Vector sigma2 = garch_volatility(a0, a1, b1, y_, sigma2_init_);

  // recursive sensitivities d sigma2_t / d(a0, a1, b1)
  Vector grad_nat = Vector::Zero(3);
  double s_a0 = 0.0, s_a1 = 0.0, s_b1 = 0.0;  // sensitivities at t-1 = 0
  for (Index t = 1; t < T; ++t) {
    const double y2 = y_[t - 1] * y_[t - 1];
    s_a0 = 1.0 + b1 * s_a0;
    s_a1 = y2 + b1 * s_a1;
    s_b1 = sigma2[t - 1] + b1 * s_b1;
    const double dld = dterm_dsigma2(y_[t], sigma2[t]);
    grad_nat[0] += dld * s_a0;
    grad_nat[1] += dld * s_a1;
    grad_nat[2] += dld * s_b1;
  }

  // prior gradients on the natural scale
  grad_nat[0] += (priors_.a0_shape - 1.0) / a0 - priors_.a0_rate;
  grad_nat[1] += (priors_.a1_a - 1.0) / a1 - (priors_.a1_b - 1.0) / (1.0 - a1);
  grad_nat[2] += (priors_.b1_a - 1.0) / b1 - (priors_.b1_b - 1.0) / (1.0 - b1);

  // chain rule through the transforms plus Jacobian log-derivatives
  Vector grad(3);
  grad[0] = grad_nat[0] * a0 + 1.0;
  grad[1] = grad_nat[1] * a1 * (1.0 - a1) + (1.0 - 2.0 * a1);
  grad[2] = grad_nat[2] * b1 * (1.0 - b1) + (1.0 - 2.0 * b1);
  return grad;
}

double GarchModel::per_obs_loglik(const Vector& theta, int i) const {
  check_obs_index(i);
  const Vector sigma2 = garch_volatility(theta[0], theta[1], theta[2], y_, sigma2_init_);
  return term_loglik(y_[i - 1], sigma2[i - 1]);
}

double GarchModel::perturbed_loglik(const Vector& theta, const PerturbationScheme& scheme) const {
  check_deletion(scheme);
  Vector y = y_;
  std::vector<bool> dropped(static_cast<size_t>(y_.size()), false);

  switch (scheme.kind) {
    case PerturbationScheme::Kind::case_deletion:
      for (int i : scheme.indices) {
        dropped[static_cast<size_t>(i - 1)] = true;
        if (opts_.deletion_recomputes_path) y[i - 1] = 0.0;  // conditional mean
      }
      break;
    case PerturbationScheme::Kind::additive_5sigma: {
      const double shift = 5.0 * sample_sd(y_);
      for (int i : scheme.indices) y[i - 1] += shift;
      break;
    }
    case PerturbationScheme::Kind::label_flip:
      throw std::invalid_argument("GarchModel: label_flip requires a binary response");
  }

  const Vector sigma2 = garch_volatility(theta[0], theta[1], theta[2], y, sigma2_init_);
  double ll = 0.0;
  for (Index t = 1; t < y.size(); ++t)
    if (!dropped[static_cast<size_t>(t)]) ll += term_loglik(y[t], sigma2[t]);
  return ll;
}

}  // namespace bregdiag
