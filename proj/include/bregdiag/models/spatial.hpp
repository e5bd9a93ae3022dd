#pragma once

#include <string>
#include <vector>

#include "bregdiag/model.hpp"

namespace bregdiag {

/// Quadratic trend-surface design: row i = [1, x, y, xy, x^2, y^2].
Matrix spatial_design(const Matrix& coords);

struct GammaPrior {
  double shape = 2.0;
  double rate = 0.1;
};

/// Spatial trend regression with independent N(0, sigma2) errors.
/// Natural parameters (beta0..beta5, sigma2); sampled on (beta, log sigma2).
class SpatialTrendModel final : public TargetModel {
 public:
  SpatialTrendModel(Matrix coords, Vector z, double beta_prior_sd, GammaPrior sigma2_prior);

  struct Priors {
    double beta_sd;
    GammaPrior sigma2;
  };
  /// Priors 1-3: N(0,100^2)+Gamma(2,0.1), N(0,10^2)+Gamma(2,0.1),
  /// N(0,10^2)+Gamma(0.1,0.1).
  static Priors preset_prior(int id);

  int dim() const override { return 7; }
  double log_density(const Vector& u) const override;
  Vector grad_log_density(const Vector& u) const override;

  std::vector<std::string> param_names() const override;
  int n_obs() const override { return static_cast<int>(z_.size()); }
  Vector to_natural(const Vector& u) const override;
  Vector to_unconstrained(const Vector& theta) const override;
  double log_likelihood(const Vector& theta) const override;
  double log_prior(const Vector& theta) const override;
  double per_obs_loglik(const Vector& theta, int i) const override;
  double perturbed_loglik(const Vector& theta, const PerturbationScheme& scheme) const override;

  const Matrix& design() const { return X_; }
  const Vector& response() const { return z_; }

 private:
  Matrix coords_;
  Matrix X_;
  Vector z_;
  double beta_prior_sd_;
  GammaPrior sigma2_prior_;
};

}  // namespace bregdiag
