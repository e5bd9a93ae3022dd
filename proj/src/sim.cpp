#include "bregdiag/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "bregdiag/math.hpp"
#include "bregdiag/parallel.hpp"

namespace bregdiag {

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::logistic: return "logistic";
    case ModelKind::spatial: return "spatial";
    case ModelKind::garch: return "garch";
  }
  return "?";
}

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::I: return "I";
    case Scenario::II: return "II";
    case Scenario::III: return "III";
    case Scenario::IV: return "IV";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "logistic") return ModelKind::logistic;
  if (s == "spatial") return ModelKind::spatial;
  if (s == "garch") return ModelKind::garch;
  throw std::invalid_argument("unknown model '" + s + "' (valid: logistic, spatial, garch)");
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "I") return Scenario::I;
  if (s == "II") return Scenario::II;
  if (s == "III") return Scenario::III;
  if (s == "IV") return Scenario::IV;
  throw std::invalid_argument("unknown scenario '" + s + "' (valid: I, II, III, IV)");
}

SimData generate_logistic(const Vector& beta, int n, Rng& rng) {
  const Index k = beta.size();
  SimData data;
  data.design.resize(n, k);
  data.design.col(0).setOnes();
  for (Index i = 0; i < n; ++i)
    for (Index j = 1; j < k; ++j) data.design(i, j) = rng.normal();
  data.response.resize(n);
  for (Index i = 0; i < n; ++i)
    data.response[i] = rng.bernoulli(sigmoid(data.design.row(i).dot(beta))) ? 1.0 : 0.0;
  return data;
}

SimData generate_spatial(const Vector& beta, double sigma2, int n, Rng& rng) {
  if (beta.size() != 6) throw std::invalid_argument("generate_spatial: beta must have 6 entries");
  if (sigma2 < 0.0) throw std::invalid_argument("generate_spatial: sigma2 must be nonnegative");
  SimData data;
  data.coords.resize(n, 2);
  for (Index i = 0; i < n; ++i) {
    data.coords(i, 0) = rng.normal();
    data.coords(i, 1) = rng.normal();
  }
  const double sd = std::sqrt(sigma2);
  data.response = spatial_design(data.coords) * beta;
  for (Index i = 0; i < n; ++i) data.response[i] += sd * rng.normal();
  return data;
}

SimData generate_garch(double alpha0, double alpha1, double beta1, int T, int burnin, Rng& rng) {
  if (alpha0 <= 0.0 || alpha1 < 0.0 || beta1 < 0.0 || alpha1 + beta1 >= 1.0)
    throw std::invalid_argument("generate_garch: generator needs alpha0 > 0 and alpha1+beta1 < 1");
  SimData data;
  data.response.resize(T);
  double sigma2 = alpha0 / (1.0 - alpha1 - beta1);
  for (int t = 0; t < burnin + T; ++t) {
    const double y = std::sqrt(sigma2) * rng.normal();
    if (t >= burnin) data.response[t - burnin] = y;
    sigma2 = alpha0 + alpha1 * y * y + beta1 * sigma2;
  }
  return data;
}

Vector contaminate(const Vector& y, const PerturbationScheme& scheme) {
  check_index_set(scheme.indices, static_cast<int>(y.size()));
  Vector out = y;
  switch (scheme.kind) {
    case PerturbationScheme::Kind::additive_5sigma: {
      const double shift = 5.0 * sample_sd(y);  // pre-contamination sample SD
      for (int i : scheme.indices) out[i - 1] += shift;
      break;
    }
    case PerturbationScheme::Kind::label_flip:
      for (int i : scheme.indices) {
        if (y[i - 1] != 0.0 && y[i - 1] != 1.0)
          throw std::invalid_argument("contaminate: cannot flip non-binary value " +
                                      std::to_string(y[i - 1]) + " at index " +
                                      std::to_string(i));
        out[i - 1] = 1.0 - y[i - 1];
      }
      break;
    case PerturbationScheme::Kind::case_deletion:
      throw std::invalid_argument("contaminate: case_deletion is not a data contamination");
  }
  return out;
}

void ScenarioConfig::validate() const {
  if (true_params.size() == 0) throw std::invalid_argument("ScenarioConfig: true_params empty");
  if (model == ModelKind::spatial && true_params.size() != 6)
    throw std::invalid_argument("ScenarioConfig: spatial model needs 6 coefficients");
  if (model == ModelKind::garch && true_params.size() != 3)
    throw std::invalid_argument("ScenarioConfig: garch model needs (alpha0, alpha1, beta1)");
  if (n < 3) throw std::invalid_argument("ScenarioConfig: n too small");
  if (replications < 1) throw std::invalid_argument("ScenarioConfig: replications must be >= 1");
  if (prior_id < 1 || prior_id > 3)
    throw std::invalid_argument("ScenarioConfig: prior must be 1, 2 or 3");
  for (int w : watched)
    if (w < 1 || w > n)
      throw std::invalid_argument("ScenarioConfig: watched index " + std::to_string(w) +
                                  " outside [1, n]");
  if (!watched.empty()) check_index_set(watched, n);
  if (model == ModelKind::garch)
    for (int w : watched)
      if (w < 2) throw std::invalid_argument("ScenarioConfig: garch watched index must be >= 2");
}

std::vector<int> contaminated_indices(Scenario scenario, std::vector<int> watched) {
  std::sort(watched.begin(), watched.end());
  const int count = static_cast<int>(scenario);
  if (count == 0) return {};
  if (count > static_cast<int>(watched.size()))
    throw std::invalid_argument("scenario needs more watched indices than provided");
  return {watched.end() - count, watched.end()};
}

SimData make_replication_data(const ScenarioConfig& cfg, int replication) {
  Rng rng(derive_seed(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(replication)), 0));
  SimData data;
  switch (cfg.model) {
    case ModelKind::logistic: data = generate_logistic(cfg.true_params, cfg.n, rng); break;
    case ModelKind::spatial:
      data = generate_spatial(cfg.true_params, cfg.sigma2, cfg.n, rng);
      break;
    case ModelKind::garch:
      data = generate_garch(cfg.true_params[0], cfg.true_params[1], cfg.true_params[2], cfg.n,
                            cfg.garch_burnin, rng);
      break;
  }
  const auto contaminated = contaminated_indices(cfg.scenario, cfg.watched);
  if (!contaminated.empty()) {
    const auto kind = cfg.model == ModelKind::logistic ? PerturbationScheme::Kind::label_flip
                                                       : PerturbationScheme::Kind::additive_5sigma;
    data.response = contaminate(data.response, {kind, contaminated});
  }
  return data;
}

std::unique_ptr<TargetModel> build_model(const ScenarioConfig& cfg, const SimData& data) {
  switch (cfg.model) {
    case ModelKind::logistic:
      return std::make_unique<LogisticModel>(data.design, data.response,
                                             LogisticModel::preset_prior(cfg.prior_id));
    case ModelKind::spatial: {
      const auto priors = SpatialTrendModel::preset_prior(cfg.prior_id);
      return std::make_unique<SpatialTrendModel>(data.coords, data.response, priors.beta_sd,
                                                 priors.sigma2);
    }
    case ModelKind::garch:
      return std::make_unique<GarchModel>(data.response, GarchModel::preset_prior(cfg.prior_id),
                                          cfg.garch);
  }
  throw std::logic_error("build_model: unreachable");
}

PosteriorSample fit_model(const TargetModel& model, HmcConfig cfg) {
  return run_chains(
      model, cfg, {}, [&model](const Vector& u) { return model.to_natural(u); },
      model.param_names());
}

std::vector<std::string> reported_params(ModelKind kind) {
  switch (kind) {
    case ModelKind::logistic: return {"beta0", "beta1", "beta2"};
    case ModelKind::spatial:
      return {"beta0", "beta1", "beta2", "beta3", "beta4", "beta5", "sigma"};
    case ModelKind::garch: return {"alpha0", "alpha1", "beta1"};
  }
  return {};
}

Vector reported_true_values(const ScenarioConfig& cfg) {
  if (cfg.model != ModelKind::spatial) return cfg.true_params;
  Vector v(7);
  v.head(6) = cfg.true_params;
  v[6] = std::sqrt(cfg.sigma2);
  return v;
}

namespace {

/// Posterior means of the reported parameters from natural-scale draws.
Vector reported_posterior_mean(ModelKind kind, const PosteriorSample& sample) {
  if (kind != ModelKind::spatial) return sample.draws.colwise().mean();
  Vector est(7);
  est.head(6) = sample.draws.leftCols(6).colwise().mean();
  est[6] = sample.draws.col(6).array().sqrt().mean();  // E[sigma | y]
  return est;
}

std::uint64_t hmc_seed_for(const ScenarioConfig& cfg, int replication) {
  return derive_seed(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(replication)), 1);
}

void check_failures(int failed, int total) {
  if (failed * 20 > total)  // > 5%
    throw std::runtime_error("study failed: " + std::to_string(failed) + " of " +
                             std::to_string(total) + " replications errored");
}

}  // namespace

BiasSmseTable run_bias_study(const ScenarioConfig& cfg, int workers,
                             const std::function<Vector(int)>& point_estimator) {
  cfg.validate();
  if (cfg.scenario != Scenario::I)
    throw std::invalid_argument("run_bias_study: bias studies use scenario I (no contamination)");

  const auto params = reported_params(cfg.model);
  const Vector truth = reported_true_values(cfg);
  const int m = cfg.replications;
  const auto P = static_cast<Index>(params.size());

  Matrix estimates(m, P);
  std::vector<char> ok(static_cast<size_t>(m), 0);
  parallel_for(m, workers, [&](int r) {
    try {
      if (point_estimator) {
        estimates.row(r) = point_estimator(r).transpose();
      } else {
        const SimData data = make_replication_data(cfg, r);
        const auto model = build_model(cfg, data);
        HmcConfig hmc = cfg.hmc;
        hmc.seed = hmc_seed_for(cfg, r);
        const PosteriorSample sample = fit_model(*model, hmc);
        estimates.row(r) = reported_posterior_mean(cfg.model, sample).transpose();
      }
      ok[static_cast<size_t>(r)] = 1;
    } catch (const std::exception&) {
      ok[static_cast<size_t>(r)] = 0;
    }
  });

  BiasSmseTable table;
  table.params = params;
  table.true_values = truth;
  const auto kept = static_cast<Index>(std::count(ok.begin(), ok.end(), 1));
  table.failed = m - static_cast<int>(kept);
  check_failures(table.failed, m);

  table.estimates.resize(kept, P);
  Index row = 0;
  for (int r = 0; r < m; ++r)
    if (ok[static_cast<size_t>(r)]) table.estimates.row(row++) = estimates.row(r);

  table.bias.resize(P);
  table.smse.resize(P);
  table.mse.resize(P);
  for (Index j = 0; j < P; ++j) {
    const auto err = table.estimates.col(j).array() - truth[j];
    table.bias[j] = err.mean();
    table.mse[j] = err.square().mean();
    table.smse[j] = std::sqrt(table.mse[j]);
  }
  return table;
}

InfluenceStudyTable run_influence_study(const ScenarioConfig& cfg, int workers) {
  cfg.validate();
  if (cfg.watched.empty())
    throw std::invalid_argument("run_influence_study: watched_indices must be nonempty");

  const int m = cfg.replications;
  const auto W = static_cast<Index>(cfg.watched.size());
  Matrix divergences(m, W);
  std::vector<char> ok(static_cast<size_t>(m), 0);

  parallel_for(m, workers, [&](int r) {
    try {
      const SimData data = make_replication_data(cfg, r);
      const auto model = build_model(cfg, data);
      HmcConfig hmc = cfg.hmc;
      hmc.seed = hmc_seed_for(cfg, r);
      const PosteriorSample sample = fit_model(*model, hmc);
      InfluenceOptions opts = cfg.influence;
      opts.workers = 1;  // replications already run in parallel
      const DivergenceReport report = influence_report(*model, sample.draws, opts);
      for (Index w = 0; w < W; ++w) {
        const int obs = cfg.watched[static_cast<size_t>(w)];
        const int pos = obs - report.obs_ids.front();
        divergences(r, w) = report.normalized[pos];
      }
      ok[static_cast<size_t>(r)] = 1;
    } catch (const std::exception&) {
      ok[static_cast<size_t>(r)] = 0;
    }
  });

  InfluenceStudyTable table;
  table.scenario = cfg.scenario;
  table.watched = cfg.watched;
  const auto kept = static_cast<Index>(std::count(ok.begin(), ok.end(), 1));
  table.failed = m - static_cast<int>(kept);
  check_failures(table.failed, m);

  table.per_replication.resize(kept, W);
  Index row = 0;
  for (int r = 0; r < m; ++r)
    if (ok[static_cast<size_t>(r)]) table.per_replication.row(row++) = divergences.row(r);

  table.mean.resize(W);
  table.sd.resize(W);
  for (Index w = 0; w < W; ++w) {
    const auto col = table.per_replication.col(w);
    table.mean[w] = col.mean();
    table.sd[w] = kept > 1 ? std::sqrt((col.array() - table.mean[w]).square().sum() /
                                       static_cast<double>(kept - 1))
                           : 0.0;
  }
  return table;
}

namespace {

std::string format_double(double v, int prec) {
  std::ostringstream out;
  out << std::setprecision(prec) << v;
  return out.str();
}

}  // namespace

std::string bias_table_to_csv(const BiasSmseTable& t) {
  std::ostringstream out;
  out << "parameter,true,bias,smse,mse\n";
  for (size_t j = 0; j < t.params.size(); ++j) {
    const auto i = static_cast<Index>(j);
    out << t.params[j] << ',' << format_double(t.true_values[i], 10) << ','
        << format_double(t.bias[i], 10) << ',' << format_double(t.smse[i], 10) << ','
        << format_double(t.mse[i], 10) << '\n';
  }
  return out.str();
}

std::string bias_table_to_text(const BiasSmseTable& t) {
  std::ostringstream out;
  out << std::left << std::setw(10) << "Parameter" << std::right << std::setw(10) << "True"
      << std::setw(12) << "Bias" << std::setw(12) << "SMSE" << std::setw(12) << "MSE" << '\n';
  out << std::string(56, '-') << '\n';
  out << std::fixed << std::setprecision(4);
  for (size_t j = 0; j < t.params.size(); ++j) {
    const auto i = static_cast<Index>(j);
    out << std::left << std::setw(10) << t.params[j] << std::right << std::setw(10)
        << t.true_values[i] << std::setw(12) << t.bias[i] << std::setw(12) << t.smse[i]
        << std::setw(12) << t.mse[i] << '\n';
  }
  if (t.failed > 0) out << "(" << t.failed << " replication(s) failed and were excluded)\n";
  return out.str();
}

std::string influence_table_to_csv(const std::vector<InfluenceStudyTable>& tables) {
  std::ostringstream out;
  out << "scenario,obs,mean,sd\n";
  for (const auto& t : tables)
    for (size_t w = 0; w < t.watched.size(); ++w) {
      const auto i = static_cast<Index>(w);
      out << to_string(t.scenario) << ',' << t.watched[w] << ',' << format_double(t.mean[i], 10)
          << ',' << format_double(t.sd[i], 10) << '\n';
    }
  return out.str();
}

std::string influence_table_to_text(const std::vector<InfluenceStudyTable>& tables) {
  std::ostringstream out;
  out << std::left << std::setw(14) << "Perturbation" << std::setw(6) << "Obs" << std::right
      << std::setw(10) << "Mean" << std::setw(10) << "SD" << '\n';
  out << std::string(40, '-') << '\n';
  out << std::fixed << std::setprecision(3);
  for (const auto& t : tables) {
    for (size_t w = 0; w < t.watched.size(); ++w) {
      const auto i = static_cast<Index>(w);
      out << std::left << std::setw(14) << to_string(t.scenario) << std::setw(6) << t.watched[w]
          << std::right << std::setw(10) << t.mean[i] << std::setw(10) << t.sd[i] << '\n';
    }
    if (t.failed > 0)
      out << "(scenario " << to_string(t.scenario) << ": " << t.failed
          << " replication(s) failed)\n";
  }
  return out.str();
}

}  // namespace bregdiag
