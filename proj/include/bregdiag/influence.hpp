#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "bregdiag/model.hpp"
#include "bregdiag/types.hpp"

namespace bregdiag {

/// Log perturbation ratios log delta(theta^s, y, X) across posterior draws,
/// with the log of their mean computed by log-sum-exp.
struct DeltaSamples {
  Vector log_delta;
  double log_delta_bar = 0.0;

  double delta_bar() const { return std::exp(log_delta_bar); }
};

/// Diagonal Gaussian auxiliary density for the IWMDE.
struct OmegaDensity {
  Vector mean;
  Vector sd;

  double log_density(const Vector& theta) const;
  /// Moment-matched to the draws, column by column.
  static OmegaDensity moment_matched(const Matrix& draws);
};

struct IwmdeEstimate {
  double log_m_tilde = 0.0;
  double ess_weights = 0.0;
  bool low_ess = false;  // ess_weights < 0.05 * S
};

enum class Estimator { kl_fast, general_alpha };

inline const char* to_string(Estimator e) {
  return e == Estimator::kl_fast ? "kl_fast" : "general_alpha";
}

struct DivergenceReport {
  std::vector<int> obs_ids;  // 1-based observation ids, ascending
  Vector raw;                // d_i >= 0
  Vector normalized;         // sums to 1
  double threshold = 0.0;    // multiplier / n_scored
  double multiplier = 1.0;
  std::vector<int> flagged;  // obs ids with normalized > threshold
  double alpha = 1.0;
  Estimator estimator = Estimator::kl_fast;
  int clamped = 0;      // raw values in [-1e-6, 0) clamped to 0
  bool low_iw_ess = false;  // general-alpha path: importance weights collapsed
};

/// log delta_s = perturbed loglik - full loglik at each draw. Draws are on
/// the natural scale. full_loglik may carry precomputed full-data logliks
/// per draw (empty => computed here).
DeltaSamples compute_delta(const TargetModel& model, const Matrix& draws,
                           const PerturbationScheme& scheme, const Vector& full_loglik = {});

/// Importance-weighted marginal density estimate
/// m~ = [S^-1 sum omega(theta^s) / (f(y|theta^s) p(theta^s))]^-1.
IwmdeEstimate iwmde(const TargetModel& model, const Matrix& draws, const OmegaDensity& omega);

/// KL fast path: d = -S^-1 sum log(delta_s / delta_bar). Needs no
/// normalizing-constant evaluation.
double divergence_kl(const DeltaSamples& delta);

/// General-alpha Monte Carlo Bregman divergence using the approximate
/// posterior density p~(theta^s|y) = f(y|theta^s) pi(theta^s) / m~.
/// alpha = 1 routes to the KL path and alpha = 0 to the Itakura-Saito limit.
double divergence_general_alpha(const DeltaSamples& delta, double alpha, const IwmdeEstimate& iw,
                                const TargetModel& model, const Matrix& draws);

/// Same, with log f + log pi per draw already computed.
double divergence_general_alpha(const DeltaSamples& delta, double alpha, const IwmdeEstimate& iw,
                                const Vector& log_fp);

/// Normalizing Bregman operator: raw / sum(raw). Order-preserving; errors on
/// an all-zero input.
Vector normalize_divergences(ConstVectorRef raw);

/// Indices (into `normalized`) with value strictly above multiplier/n.
std::vector<int> flag_influential(ConstVectorRef normalized, double multiplier = 1.0);

struct InfluenceOptions {
  double alpha = 1.0;
  Estimator estimator = Estimator::kl_fast;
  double multiplier = 1.0;
  int workers = 1;
};

/// Case-deletion influence for every scored observation: deltas, divergences
/// (parallel over observations), normalization, flags.
DivergenceReport influence_report(const TargetModel& model, const Matrix& draws,
                                  const InfluenceOptions& opts = {});

std::string report_to_json(const DivergenceReport& report);
std::string report_to_csv(const DivergenceReport& report);

}  // namespace bregdiag
