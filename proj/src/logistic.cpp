#include "bregdiag/models/logistic.hpp"

#include <cmath>
#include <stdexcept>

#include "bregdiag/math.hpp"

namespace bregdiag {

double CoeffPrior::log_pdf(double beta) const {
  return family == Family::normal ? log_normal_pdf(beta, 0.0, scale)
                                  : log_cauchy_pdf(beta, 0.0, scale);
}

double CoeffPrior::grad_log_pdf(double beta) const {
  if (family == Family::normal) return -beta / (scale * scale);
  return -2.0 * beta / (scale * scale + beta * beta);
}

LogisticModel::LogisticModel(Matrix X, Vector y, std::vector<CoeffPrior> priors)
    : X_(std::move(X)), y_(std::move(y)), priors_(std::move(priors)) {
  if (X_.rows() != y_.size()) throw std::invalid_argument("LogisticModel: X/y size mismatch");
  if (X_.rows() < X_.cols())
    throw std::invalid_argument("LogisticModel: fewer observations than coefficients");
  if (priors_.empty()) priors_.assign(static_cast<size_t>(X_.cols()), CoeffPrior{});
  if (static_cast<Index>(priors_.size()) != X_.cols())
    throw std::invalid_argument("LogisticModel: one prior per coefficient required");
  for (Index i = 0; i < y_.size(); ++i)
    if (y_[i] != 0.0 && y_[i] != 1.0)
      throw std::invalid_argument("LogisticModel: responses must be 0 or 1");
  for (const auto& p : priors_)
    if (p.scale <= 0.0) throw std::invalid_argument("LogisticModel: prior scale must be positive");
}

LogisticModel::LogisticModel(Matrix X, Vector y, CoeffPrior shared_prior)
    : LogisticModel(std::move(X), std::move(y), std::vector<CoeffPrior>{}) {
  if (shared_prior.scale <= 0.0)
    throw std::invalid_argument("LogisticModel: prior scale must be positive");
  priors_.assign(static_cast<size_t>(X_.cols()), shared_prior);
}

CoeffPrior LogisticModel::preset_prior(int id) {
  switch (id) {
    case 1: return {CoeffPrior::Family::normal, 10.0};
    case 2: return {CoeffPrior::Family::cauchy, 10.0};
    case 3: return {CoeffPrior::Family::cauchy, 2.5};
    default: throw std::invalid_argument("LogisticModel: prior id must be 1, 2 or 3");
  }
}

std::vector<std::string> LogisticModel::param_names() const {
  std::vector<std::string> names;
  names.reserve(X_.cols());
  for (Index j = 0; j < X_.cols(); ++j) names.push_back("beta" + std::to_string(j));
  return names;
}

double LogisticModel::log_likelihood(const Vector& beta) const {
  const Vector eta = X_ * beta;
  double ll = 0.0;
  for (Index i = 0; i < y_.size(); ++i) ll += y_[i] * eta[i] - log1p_exp(eta[i]);
  return ll;
}

double LogisticModel::log_prior(const Vector& beta) const {
  double lp = 0.0;
  for (Index j = 0; j < beta.size(); ++j) lp += priors_[j].log_pdf(beta[j]);
  return lp;
}

double LogisticModel::log_density(const Vector& beta) const {
  return log_likelihood(beta) + log_prior(beta);
}

Vector LogisticModel::grad_log_density(const Vector& beta) const {
  const Vector eta = X_ * beta;
  Vector mu(eta.size());
  for (Index i = 0; i < eta.size(); ++i) mu[i] = sigmoid(eta[i]);
  Vector grad = X_.transpose() * (y_ - mu);
  for (Index j = 0; j < beta.size(); ++j) grad[j] += priors_[j].grad_log_pdf(beta[j]);
  return grad;
}

double LogisticModel::per_obs_loglik(const Vector& beta, int i) const {
  check_obs_index(i);
  const double eta = X_.row(i - 1).dot(beta);
  return y_[i - 1] * eta - log1p_exp(eta);
}

double LogisticModel::perturbed_loglik(const Vector& beta, const PerturbationScheme& scheme) const {
  check_deletion(scheme);
  if (scheme.kind == PerturbationScheme::Kind::case_deletion) {
    double ll = log_likelihood(beta);
    for (int i : scheme.indices) ll -= per_obs_loglik(beta, i);
    return ll;
  }
  if (scheme.kind == PerturbationScheme::Kind::label_flip) {
    double ll = log_likelihood(beta);
    for (int i : scheme.indices) {
      const double eta = X_.row(i - 1).dot(beta);
      const double orig = y_[i - 1] * eta - log1p_exp(eta);
      const double flipped = (1.0 - y_[i - 1]) * eta - log1p_exp(eta);
      ll += flipped - orig;
    }
    return ll;
  }
  throw std::invalid_argument("LogisticModel: additive_5sigma requires a continuous response");
}

}  // namespace bregdiag
