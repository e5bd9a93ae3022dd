#pragma once

#include <string>
#include <vector>

#include "bregdiag/model.hpp"

namespace bregdiag {

/// Independent prior on one regression coefficient.
struct CoeffPrior {
  enum class Family { normal, cauchy };
  Family family = Family::normal;
  double scale = 10.0;

  double log_pdf(double beta) const;
  double grad_log_pdf(double beta) const;
};

/// Bayesian logistic regression: y_i ~ Bernoulli(logit^-1(x_i' beta)).
/// Sampling scale equals the natural scale.
class LogisticModel final : public TargetModel {
 public:
  /// X must carry an explicit intercept column if one is wanted; y in {0,1}.
  LogisticModel(Matrix X, Vector y, std::vector<CoeffPrior> priors);
  LogisticModel(Matrix X, Vector y, CoeffPrior shared_prior);

  /// Priors 1-3 from the simulation studies: N(0,10^2), Cauchy(0,10),
  /// Cauchy(0,2.5).
  static CoeffPrior preset_prior(int id);

  int dim() const override { return static_cast<int>(X_.cols()); }
  double log_density(const Vector& beta) const override;
  Vector grad_log_density(const Vector& beta) const override;

  std::vector<std::string> param_names() const override;
  int n_obs() const override { return static_cast<int>(X_.rows()); }
  Vector to_natural(const Vector& u) const override { return u; }
  Vector to_unconstrained(const Vector& theta) const override { return theta; }
  double log_likelihood(const Vector& beta) const override;
  double log_prior(const Vector& beta) const override;
  double per_obs_loglik(const Vector& beta, int i) const override;
  double perturbed_loglik(const Vector& beta, const PerturbationScheme& scheme) const override;

  const Matrix& design() const { return X_; }
  const Vector& response() const { return y_; }

 private:
  Matrix X_;
  Vector y_;
  std::vector<CoeffPrior> priors_;
};

}  // namespace bregdiag
