#pragma once

#include <string>
#include <vector>

#include "bregdiag/target.hpp"
#include "bregdiag/types.hpp"

namespace bregdiag {

/// Likelihood perturbation. Observation indices are 1-based, matching the
/// data files and the rendered tables.
struct PerturbationScheme {
  enum class Kind { case_deletion, additive_5sigma, label_flip };
  Kind kind = Kind::case_deletion;
  std::vector<int> indices;

  static PerturbationScheme deletion(std::vector<int> idx) {
    return {Kind::case_deletion, std::move(idx)};
  }
};

/// Indices must be distinct and lie in [1, n].
void check_index_set(const std::vector<int>& indices, int n);

inline const char* to_string(PerturbationScheme::Kind k) {
  switch (k) {
    case PerturbationScheme::Kind::case_deletion: return "case_deletion";
    case PerturbationScheme::Kind::additive_5sigma: return "additive_5sigma";
    case PerturbationScheme::Kind::label_flip: return "label_flip";
  }
  return "?";
}

/// A posterior model: sampled on an unconstrained scale (log_density /
/// grad_log_density from TargetDensity operate there), scored on the natural
/// scale. Immutable after construction; all evaluations are const and
/// thread-safe.
class TargetModel : public TargetDensity {
 public:
  virtual std::vector<std::string> param_names() const = 0;
  virtual int n_obs() const = 0;

  virtual Vector to_natural(const Vector& unconstrained) const = 0;
  virtual Vector to_unconstrained(const Vector& natural) const = 0;

  /// Full-data log likelihood at natural-scale parameters.
  virtual double log_likelihood(const Vector& theta) const = 0;
  /// Prior log density in the natural parameterization (no Jacobian).
  virtual double log_prior(const Vector& theta) const = 0;
  /// Log of the i-th likelihood factor, i in [first_scored_obs(), n_obs()].
  virtual double per_obs_loglik(const Vector& theta, int i) const = 0;
  /// Log likelihood under the perturbation.
  virtual double perturbed_loglik(const Vector& theta, const PerturbationScheme& scheme) const = 0;

  /// First observation with a likelihood factor (2 for GARCH).
  virtual int first_scored_obs() const { return 1; }

 protected:
  void check_obs_index(int i) const;
  void check_deletion(const PerturbationScheme& scheme) const;
};

}  // namespace bregdiag
