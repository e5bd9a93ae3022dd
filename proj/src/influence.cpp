#include "bregdiag/influence.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "bregdiag/math.hpp"
#include "bregdiag/parallel.hpp"

namespace bregdiag {

namespace {

constexpr double kExpGuard = 690.0;  // exp() overflows past ~709
constexpr double kNoiseFloor = -1e-6;

double checked_raw(double d, int obs_id, int* clamped) {
  if (!std::isfinite(d))
    throw std::runtime_error("divergence for observation " + std::to_string(obs_id) +
                             " is not finite");
  if (d < kNoiseFloor)
    throw std::runtime_error("divergence for observation " + std::to_string(obs_id) +
                             " is negative beyond Monte Carlo noise: " + std::to_string(d));
  if (d < 0.0) {
    if (clamped) ++(*clamped);
    return 0.0;
  }
  return d;
}

Vector log_fp_per_draw(const TargetModel& model, const Matrix& draws) {
  Vector log_fp(draws.rows());
  for (Index s = 0; s < draws.rows(); ++s) {
    const Vector theta = draws.row(s).transpose();
    log_fp[s] = model.log_likelihood(theta) + model.log_prior(theta);
  }
  return log_fp;
}

Vector loglik_per_draw(const TargetModel& model, const Matrix& draws) {
  Vector ll(draws.rows());
  for (Index s = 0; s < draws.rows(); ++s)
    ll[s] = model.log_likelihood(draws.row(s).transpose());
  return ll;
}

}  // namespace

double OmegaDensity::log_density(const Vector& theta) const {
  double lp = 0.0;
  for (Index j = 0; j < theta.size(); ++j) lp += log_normal_pdf(theta[j], mean[j], sd[j]);
  return lp;
}

OmegaDensity OmegaDensity::moment_matched(const Matrix& draws) {
  if (draws.rows() < 2) throw std::invalid_argument("OmegaDensity: need at least 2 draws");
  OmegaDensity omega;
  omega.mean = draws.colwise().mean();
  omega.sd.resize(draws.cols());
  for (Index j = 0; j < draws.cols(); ++j) {
    const double var = (draws.col(j).array() - omega.mean[j]).square().sum() /
                       static_cast<double>(draws.rows() - 1);
    omega.sd[j] = std::sqrt(std::max(var, 1e-12));
  }
  return omega;
}

DeltaSamples compute_delta(const TargetModel& model, const Matrix& draws,
                           const PerturbationScheme& scheme, const Vector& full_loglik) {
  const Index S = draws.rows();
  if (S == 0) throw std::invalid_argument("compute_delta: no draws");
  if (full_loglik.size() != 0 && full_loglik.size() != S)
    throw std::invalid_argument("compute_delta: full_loglik size mismatch");

  DeltaSamples delta;
  delta.log_delta.resize(S);
  for (Index s = 0; s < S; ++s) {
    const Vector theta = draws.row(s).transpose();
    const double full =
        full_loglik.size() ? full_loglik[s] : model.log_likelihood(theta);
    const double pert = model.perturbed_loglik(theta, scheme);
    const double ld = pert - full;
    if (!std::isfinite(ld))
      throw std::runtime_error("compute_delta: non-finite log likelihood at draw " +
                               std::to_string(s));
    delta.log_delta[s] = ld;
  }
  delta.log_delta_bar = log_sum_exp(delta.log_delta) - std::log(static_cast<double>(S));
  return delta;
}

IwmdeEstimate iwmde(const TargetModel& model, const Matrix& draws, const OmegaDensity& omega) {
  const Index S = draws.rows();
  if (S == 0) throw std::invalid_argument("iwmde: no draws");

  Vector log_w(S);  // log omega - log f - log pi
  for (Index s = 0; s < S; ++s) {
    const Vector theta = draws.row(s).transpose();
    log_w[s] = omega.log_density(theta) - model.log_likelihood(theta) - model.log_prior(theta);
  }
  const double lse = log_sum_exp(log_w);
  IwmdeEstimate est;
  est.log_m_tilde = -(lse - std::log(static_cast<double>(S)));
  // ESS of the importance weights: (sum w)^2 / sum w^2, in log space
  const double lse2 = log_sum_exp(2.0 * log_w);
  est.ess_weights = std::exp(2.0 * lse - lse2);
  est.low_ess = est.ess_weights < 0.05 * static_cast<double>(S);
  return est;
}

double divergence_kl(const DeltaSamples& delta) {
  // Jensen guarantees log delta_bar >= mean(log delta)
  return delta.log_delta_bar - delta.log_delta.mean();
}

double divergence_general_alpha(const DeltaSamples& delta, double alpha, const IwmdeEstimate& iw,
                                const Vector& log_fp) {
  if (alpha == 1.0) return divergence_kl(delta);

  const Index S = delta.log_delta.size();
  if (log_fp.size() != S)
    throw std::invalid_argument("divergence_general_alpha: log_fp size mismatch");
  const Vector log_r = delta.log_delta.array() - delta.log_delta_bar;
  const Vector log_ptilde = log_fp.array() - iw.log_m_tilde;

  double acc = 0.0;
  if (alpha == 0.0) {
    // Itakura-Saito limit of the general formula: (1/r - 1 + log r) / ptilde
    for (Index s = 0; s < S; ++s) {
      if (std::abs(log_r[s]) > kExpGuard || std::abs(log_ptilde[s]) > kExpGuard)
        throw std::domain_error("divergence_general_alpha: exponent overflow at alpha = 0");
      acc += (std::exp(-log_r[s]) - 1.0 + log_r[s]) * std::exp(-log_ptilde[s]);
    }
  } else {
    const double denom = alpha * (alpha - 1.0);
    for (Index s = 0; s < S; ++s) {
      const double e1 = (alpha - 1.0) * log_r[s];
      const double e2 = alpha * log_r[s];
      const double ep = (alpha - 1.0) * log_ptilde[s];
      if (std::max({std::abs(e1), std::abs(e2), std::abs(ep)}) > kExpGuard)
        throw std::domain_error("divergence_general_alpha: exponent overflow");
      const double num = 1.0 - alpha * std::exp(e1) + (alpha - 1.0) * std::exp(e2);
      acc += num / denom * std::exp(ep);
    }
  }
  const double d = acc / static_cast<double>(S);
  if (!std::isfinite(d))
    throw std::runtime_error("divergence_general_alpha: estimate is not finite");
  return d;
}

double divergence_general_alpha(const DeltaSamples& delta, double alpha, const IwmdeEstimate& iw,
                                const TargetModel& model, const Matrix& draws) {
  if (alpha == 1.0) return divergence_kl(delta);
  return divergence_general_alpha(delta, alpha, iw, log_fp_per_draw(model, draws));
}

Vector normalize_divergences(ConstVectorRef raw) {
  if (raw.size() == 0) throw std::invalid_argument("normalize_divergences: empty input");
  if ((raw.array() < 0.0).any())
    throw std::invalid_argument("normalize_divergences: negative entry");
  const double total = raw.sum();
  if (total <= 0.0) throw std::invalid_argument("normalize_divergences: all divergences are zero");
  return raw / total;
}

std::vector<int> flag_influential(ConstVectorRef normalized, double multiplier) {
  if (multiplier <= 0.0) throw std::invalid_argument("flag_influential: multiplier must be > 0");
  const double cutoff = multiplier / static_cast<double>(normalized.size());
  std::vector<int> out;
  for (Index i = 0; i < normalized.size(); ++i)
    if (normalized[i] > cutoff) out.push_back(static_cast<int>(i));
  return out;
}

DivergenceReport influence_report(const TargetModel& model, const Matrix& draws,
                                  const InfluenceOptions& opts) {
  const int first = model.first_scored_obs();
  const int n = model.n_obs();
  const int scored = n - first + 1;
  if (scored <= 0) throw std::invalid_argument("influence_report: nothing to score");
  if (draws.cols() != model.dim())
    throw std::invalid_argument("influence_report: draws/parameter-count mismatch");

  DivergenceReport report;
  report.alpha = opts.alpha;
  report.estimator = opts.alpha == 1.0 ? Estimator::kl_fast : opts.estimator;
  report.multiplier = opts.multiplier;
  report.obs_ids.resize(scored);
  for (int k = 0; k < scored; ++k) report.obs_ids[k] = first + k;

  const Vector full_ll = loglik_per_draw(model, draws);

  // IWMDE pieces are shared across observations
  Vector log_fp;
  IwmdeEstimate iw;
  const bool need_iw = report.estimator == Estimator::general_alpha;
  if (need_iw) {
    log_fp = log_fp_per_draw(model, draws);
    iw = iwmde(model, draws, OmegaDensity::moment_matched(draws));
    report.low_iw_ess = iw.low_ess;
  }

  Vector raw(scored);
  std::vector<std::string> failures(static_cast<size_t>(scored));
  std::vector<int> clamp_counts(static_cast<size_t>(scored), 0);
  parallel_for(scored, opts.workers, [&](int k) {
    const int obs = report.obs_ids[static_cast<size_t>(k)];
    try {
      const auto delta =
          compute_delta(model, draws, PerturbationScheme::deletion({obs}), full_ll);
      double d = report.estimator == Estimator::kl_fast
                     ? divergence_kl(delta)
                     : divergence_general_alpha(delta, opts.alpha, iw, log_fp);
      int clamped = 0;
      raw[k] = checked_raw(d, obs, &clamped);
      clamp_counts[static_cast<size_t>(k)] = clamped;
    } catch (const std::exception& e) {
      failures[static_cast<size_t>(k)] = e.what();
      raw[k] = 0.0;
    }
  });
  for (int k = 0; k < scored; ++k)
    if (!failures[static_cast<size_t>(k)].empty())
      throw std::runtime_error("influence_report: observation " +
                               std::to_string(report.obs_ids[static_cast<size_t>(k)]) + ": " +
                               failures[static_cast<size_t>(k)]);

  report.raw = raw;
  for (int c : clamp_counts) report.clamped += c;
  report.normalized = normalize_divergences(report.raw);
  report.threshold = opts.multiplier / static_cast<double>(scored);
  for (int idx : flag_influential(report.normalized, opts.multiplier))
    report.flagged.push_back(report.obs_ids[static_cast<size_t>(idx)]);
  return report;
}

std::string report_to_json(const DivergenceReport& report) {
  nlohmann::json j;
  j["alpha"] = report.alpha;
  j["estimator"] = to_string(report.estimator);
  j["multiplier"] = report.multiplier;
  j["threshold"] = report.threshold;
  j["n_scored"] = report.obs_ids.size();
  j["clamped"] = report.clamped;
  j["flagged"] = report.flagged;
  nlohmann::json rows = nlohmann::json::array();
  for (size_t k = 0; k < report.obs_ids.size(); ++k) {
    const auto i = static_cast<Index>(k);
    rows.push_back({{"obs", report.obs_ids[k]},
                    {"raw", report.raw[i]},
                    {"normalized", report.normalized[i]},
                    {"flagged", std::find(report.flagged.begin(), report.flagged.end(),
                                          report.obs_ids[k]) != report.flagged.end()}});
  }
  j["observations"] = rows;
  return j.dump(2);
}

std::string report_to_csv(const DivergenceReport& report) {
  std::ostringstream out;
  out << "obs,raw,normalized,flagged\n";
  out.precision(12);
  for (size_t k = 0; k < report.obs_ids.size(); ++k) {
    const auto i = static_cast<Index>(k);
    const bool flagged = std::find(report.flagged.begin(), report.flagged.end(),
                                   report.obs_ids[k]) != report.flagged.end();
    out << report.obs_ids[k] << ',' << report.raw[i] << ',' << report.normalized[i] << ','
        << (flagged ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace bregdiag
