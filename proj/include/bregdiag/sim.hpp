#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "bregdiag/hmc.hpp"
#include "bregdiag/influence.hpp"
#include "bregdiag/models/garch.hpp"
#include "bregdiag/models/logistic.hpp"
#include "bregdiag/models/spatial.hpp"
#include "bregdiag/rng.hpp"

namespace bregdiag {

enum class ModelKind { logistic, spatial, garch };
enum class Scenario { I, II, III, IV };

const char* to_string(ModelKind kind);
const char* to_string(Scenario s);
ModelKind model_kind_from_string(const std::string& s);
Scenario scenario_from_string(const std::string& s);

/// Simulated data for one replication; the field used depends on the kind.
struct SimData {
  Matrix design;  // logistic: n x k including intercept column
  Matrix coords;  // spatial: n x 2
  Vector response;
};

/// Covariates i.i.d. standard normal behind an intercept column;
/// y ~ Bernoulli(logit^-1(X beta)).
SimData generate_logistic(const Vector& beta, int n, Rng& rng);

/// Coordinates i.i.d. standard normal; z = quadratic trend + N(0, sigma2).
SimData generate_spatial(const Vector& beta, double sigma2, int n, Rng& rng);

/// Stationary GARCH(1,1) path started at the unconditional variance; the
/// first `burnin` values are discarded.
SimData generate_garch(double alpha0, double alpha1, double beta1, int T, int burnin, Rng& rng);

/// Applies the contamination to a copy of y. additive_5sigma adds 5 sample
/// standard deviations (computed once, pre-contamination); label_flip swaps
/// 0 and 1 and rejects non-binary values.
Vector contaminate(const Vector& y, const PerturbationScheme& scheme);

struct ScenarioConfig {
  ModelKind model = ModelKind::logistic;
  Vector true_params;   // logistic betas / spatial betas / garch (a0, a1, b1)
  double sigma2 = 1.0;  // spatial error variance
  int n = 100;
  int prior_id = 3;
  Scenario scenario = Scenario::I;
  std::vector<int> watched = {19, 44, 64};
  int replications = 50;
  HmcConfig hmc;
  std::uint64_t master_seed = 1;
  GarchModel::Options garch;
  int garch_burnin = 500;
  InfluenceOptions influence;

  void validate() const;
};

/// Observations perturbed under a scenario: the last 0/1/2/3 of the sorted
/// watched indices (II contaminates one point, III two, IV three).
std::vector<int> contaminated_indices(Scenario scenario, std::vector<int> watched);

/// One replication's dataset: generate, then contaminate per the scenario.
SimData make_replication_data(const ScenarioConfig& cfg, int replication);

std::unique_ptr<TargetModel> build_model(const ScenarioConfig& cfg, const SimData& data);

/// HMC fit with natural-scale draws and model parameter names.
PosteriorSample fit_model(const TargetModel& model, HmcConfig cfg);

struct BiasSmseTable {
  std::vector<std::string> params;
  Vector true_values;
  Vector bias;
  Vector smse;      // sqrt of mean squared error
  Vector mse;       // mean squared error (the quantity the reference tables list)
  Matrix estimates; // per replication x parameter (failed rows dropped)
  int failed = 0;
};

struct InfluenceStudyTable {
  Scenario scenario = Scenario::I;
  std::vector<int> watched;
  Vector mean;             // per watched index, over replications
  Vector sd;
  Matrix per_replication;  // m x |watched| normalized divergences
  int failed = 0;
};

/// Replications of generate -> fit -> posterior mean, aggregated into bias
/// and (squared/rooted) error per reported parameter. Scenario must be I.
/// point_estimator, when given, replaces the whole generate+fit pipeline
/// (test hook); it receives the replication index.
BiasSmseTable run_bias_study(const ScenarioConfig& cfg, int workers = 1,
                             const std::function<Vector(int)>& point_estimator = nullptr);

/// Replications of generate -> contaminate -> fit -> influence_report,
/// recording the normalized divergence at each watched observation.
InfluenceStudyTable run_influence_study(const ScenarioConfig& cfg, int workers = 1);

/// Reported (tabulated) parameters; spatial maps sigma2 draws to sigma.
std::vector<std::string> reported_params(ModelKind kind);
Vector reported_true_values(const ScenarioConfig& cfg);

std::string bias_table_to_csv(const BiasSmseTable& t);
std::string bias_table_to_text(const BiasSmseTable& t);
std::string influence_table_to_csv(const std::vector<InfluenceStudyTable>& tables);
std::string influence_table_to_text(const std::vector<InfluenceStudyTable>& tables);

}  // namespace bregdiag
