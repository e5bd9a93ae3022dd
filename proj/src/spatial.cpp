#include "bregdiag/models/spatial.hpp"

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bregdiag/math.hpp"

namespace bregdiag {

Matrix spatial_design(const Matrix& coords) {
  if (coords.cols() != 2) throw std::invalid_argument("spatial_design: coords must be n x 2");
  const Index n = coords.rows();
  Matrix X(n, 6);
  for (Index i = 0; i < n; ++i) {
    const double x = coords(i, 0), y = coords(i, 1);
    X(i, 0) = 1.0;
    X(i, 1) = x;
    X(i, 2) = y;
    X(i, 3) = x * y;
    X(i, 4) = x * x;
    X(i, 5) = y * y;
  }
  return X;
}

SpatialTrendModel::SpatialTrendModel(Matrix coords, Vector z, double beta_prior_sd,
                                     GammaPrior sigma2_prior)
    : coords_(std::move(coords)),
      X_(spatial_design(coords_)),
      z_(std::move(z)),
      beta_prior_sd_(beta_prior_sd),
      sigma2_prior_(sigma2_prior) {
  if (X_.rows() != z_.size()) throw std::invalid_argument("SpatialTrendModel: coords/z mismatch");
  if (beta_prior_sd_ <= 0.0)
    throw std::invalid_argument("SpatialTrendModel: beta prior sd must be positive");
  if (sigma2_prior_.shape <= 0.0 || sigma2_prior_.rate <= 0.0)
    throw std::invalid_argument("SpatialTrendModel: Gamma prior parameters must be positive");
  Eigen::ColPivHouseholderQR<Matrix> qr(X_);
  if (qr.rank() < 6)
    throw std::invalid_argument("SpatialTrendModel: design matrix is rank deficient");
}

SpatialTrendModel::Priors SpatialTrendModel::preset_prior(int id) {
  switch (id) {
    case 1: return {100.0, {2.0, 0.1}};
    case 2: return {10.0, {2.0, 0.1}};
    case 3: return {10.0, {0.1, 0.1}};
    default: throw std::invalid_argument("SpatialTrendModel: prior id must be 1, 2 or 3");
  }
}

std::vector<std::string> SpatialTrendModel::param_names() const {
  return {"beta0", "beta1", "beta2", "beta3", "beta4", "beta5", "sigma2"};
}

Vector SpatialTrendModel::to_natural(const Vector& u) const {
  Vector theta = u;
  theta[6] = std::exp(u[6]);
  return theta;
}

Vector SpatialTrendModel::to_unconstrained(const Vector& theta) const {
  Vector u = theta;
  u[6] = std::log(theta[6]);
  return u;
}

double SpatialTrendModel::log_likelihood(const Vector& theta) const {
  const double sigma2 = theta[6];
  const auto n = static_cast<double>(z_.size());
  const double ssr = (z_ - X_ * theta.head(6)).squaredNorm();
  return -0.5 * n * (kLogTwoPi + std::log(sigma2)) - 0.5 * ssr / sigma2;
}

double SpatialTrendModel::log_prior(const Vector& theta) const {
  double lp = 0.0;
  for (Index j = 0; j < 6; ++j) lp += log_normal_pdf(theta[j], 0.0, beta_prior_sd_);
  lp += log_gamma_pdf(theta[6], sigma2_prior_.shape, sigma2_prior_.rate);
  return lp;
}

double SpatialTrendModel::log_density(const Vector& u) const {
  const Vector theta = to_natural(u);
  if (!(theta[6] > 1e-300) || !std::isfinite(theta[6]))
    return -std::numeric_limits<double>::infinity();
  // + u[6]: Jacobian of sigma2 = exp(u6)
  return log_likelihood(theta) + log_prior(theta) + u[6];
}

Vector SpatialTrendModel::grad_log_density(const Vector& u) const {
  const Vector theta = to_natural(u);
  if (!(theta[6] > 1e-300) || !std::isfinite(theta[6]))
    return Vector::Constant(7, std::numeric_limits<double>::quiet_NaN());
  const double sigma2 = theta[6];
  const Vector resid = z_ - X_ * theta.head(6);
  const auto n = static_cast<double>(z_.size());

  Vector grad(7);
  grad.head(6) = X_.transpose() * resid / sigma2;
  grad.head(6) -= theta.head(6) / (beta_prior_sd_ * beta_prior_sd_);
  // d/d(log sigma2): likelihood, Gamma prior, Jacobian
  grad[6] = -0.5 * n + 0.5 * resid.squaredNorm() / sigma2 + (sigma2_prior_.shape - 1.0) -
            sigma2_prior_.rate * sigma2 + 1.0;
  return grad;
}

double SpatialTrendModel::per_obs_loglik(const Vector& theta, int i) const {
  check_obs_index(i);
  const double sigma2 = theta[6];
  const double r = z_[i - 1] - X_.row(i - 1).dot(theta.head(6));
  return -0.5 * (kLogTwoPi + std::log(sigma2)) - 0.5 * r * r / sigma2;
}

double SpatialTrendModel::perturbed_loglik(const Vector& theta,
                                           const PerturbationScheme& scheme) const {
  check_deletion(scheme);
  if (scheme.kind == PerturbationScheme::Kind::case_deletion) {
    double ll = log_likelihood(theta);
    for (int i : scheme.indices) ll -= per_obs_loglik(theta, i);
    return ll;
  }
  if (scheme.kind == PerturbationScheme::Kind::additive_5sigma) {
    const double shift = 5.0 * sample_sd(z_);
    const double sigma2 = theta[6];
    double ll = log_likelihood(theta);
    for (int i : scheme.indices) {
      const double fit = X_.row(i - 1).dot(theta.head(6));
      const double r0 = z_[i - 1] - fit;
      const double r1 = z_[i - 1] + shift - fit;
      ll += 0.5 * (r0 * r0 - r1 * r1) / sigma2;
    }
    return ll;
  }
  throw std::invalid_argument("SpatialTrendModel: label_flip requires a binary response");
}

}  // namespace bregdiag
