#pragma once

#include <string>
#include <vector>

#include "bregdiag/model.hpp"

namespace bregdiag {

/// Conditional variance recursion sigma2_t = a0 + a1 y_{t-1}^2 + b1
/// sigma2_{t-1}, with sigma2_1 = sigma2_init.
Vector garch_volatility(double alpha0, double alpha1, double beta1, const Vector& y,
                        double sigma2_init);

/// GARCH(1,1) with normal or Student-t errors. Natural parameters
/// (alpha0, alpha1, beta1); sampled on (log alpha0, logit alpha1, logit
/// beta1). The first observation has no conditional-likelihood term.
class GarchModel final : public TargetModel {
 public:
  enum class ErrorFamily { normal, student_t };

  struct Priors {
    double a0_shape = 0.1, a0_rate = 0.1;   // alpha0 ~ Gamma
    double a1_a = 2.0, a1_b = 2.0;          // alpha1 ~ Beta
    double b1_a = 2.0, b1_b = 2.0;          // beta1 ~ Beta
  };

  struct Options {
    ErrorFamily error_family = ErrorFamily::normal;
    double nu = 5.0;             // Student-t dof; ignored for normal errors
    double sigma2_init = -1.0;   // <= 0 means: sample variance of the series
    /// Deletion recomputes downstream volatilities with y_t := 0 (the
    /// conditional mean). When false the recursion keeps the observed y and
    /// only the likelihood term is dropped.
    bool deletion_recomputes_path = true;
  };

  GarchModel(Vector returns, Priors priors);
  GarchModel(Vector returns, Priors priors, Options opts);

  /// Priors 1-3: Gamma(0.1,0.1)+Beta(2,2)+Beta(2,2); Gamma(0.1,0.1)+
  /// Beta(2,3)+Beta(3,2); Gamma(0.5,0.5)+Beta(2,3)+Beta(3,2).
  static Priors preset_prior(int id);

  int dim() const override { return 3; }
  double log_density(const Vector& u) const override;
  Vector grad_log_density(const Vector& u) const override;

  std::vector<std::string> param_names() const override;
  int n_obs() const override { return static_cast<int>(y_.size()); }
  int first_scored_obs() const override { return 2; }
  Vector to_natural(const Vector& u) const override;
  Vector to_unconstrained(const Vector& theta) const override;
  double log_likelihood(const Vector& theta) const override;
  double log_prior(const Vector& theta) const override;
  double per_obs_loglik(const Vector& theta, int i) const override;
  double perturbed_loglik(const Vector& theta, const PerturbationScheme& scheme) const override;

  double sigma2_init() const { return sigma2_init_; }
  const Vector& returns() const { return y_; }

 private:
  double term_loglik(double y, double sigma2) const;
  double dterm_dsigma2(double y, double sigma2) const;

  Vector y_;
  Priors priors_;
  Options opts_;
  double sigma2_init_;
};

}  // namespace bregdiag
