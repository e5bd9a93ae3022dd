#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include "bregdiag/csv.hpp"
#include "bregdiag/influence.hpp"
#include "bregdiag/sim.hpp"
#include "kvconfig.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;

namespace bregdiag::cli {

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

GarchModel::Options garch_options(const ModelFlags& flags) {
  GarchModel::Options opts;
  if (flags.error_family == "t")
    opts.error_family = GarchModel::ErrorFamily::student_t;
  else if (flags.error_family != "normal")
    throw std::runtime_error("unknown error family '" + flags.error_family +
                             "' (valid: normal, t)");
  opts.nu = flags.nu;
  opts.sigma2_init = flags.sigma2_init;
  opts.deletion_recomputes_path = !flags.keep_deleted_in_path;
  return opts;
}

/// Builds the model from a data file per the ingestion schema in FORMATS.md.
std::unique_ptr<TargetModel> load_model(const std::string& data_path, const ModelFlags& flags) {
  const CsvTable table = read_csv(data_path);
  const ModelKind kind = model_kind_from_string(flags.model);
  switch (kind) {
    case ModelKind::logistic: {
      if (table.cols() < 1) throw std::runtime_error(data_path + ": no columns");
      const Vector y = table.values.col(0);
      Matrix X(table.rows(), table.cols());
      X.col(0).setOnes();
      if (table.cols() > 1) X.rightCols(table.cols() - 1) = table.values.rightCols(table.cols() - 1);
      return std::make_unique<LogisticModel>(X, y, LogisticModel::preset_prior(flags.prior));
    }
    case ModelKind::spatial: {
      const Index cx = table.column("x"), cy = table.column("y"), cz = table.column("z");
      if (cx < 0 || cy < 0 || cz < 0)
        throw std::runtime_error(data_path + ": spatial data needs columns named x, y, z");
      Matrix coords(table.rows(), 2);
      coords.col(0) = table.values.col(cx);
      coords.col(1) = table.values.col(cy);
      const auto priors = SpatialTrendModel::preset_prior(flags.prior);
      return std::make_unique<SpatialTrendModel>(coords, table.values.col(cz), priors.beta_sd,
                                                 priors.sigma2);
    }
    case ModelKind::garch: {
      Vector series = table.values.col(0);
      if (flags.log_returns) {
        if (series.size() < 2) throw std::runtime_error(data_path + ": need at least 2 prices");
        if ((series.array() <= 0.0).any())
          throw std::runtime_error(data_path + ": prices must be positive for --log-returns");
        Vector returns(series.size() - 1);
        for (Index t = 1; t < series.size(); ++t)
          returns[t - 1] = std::log(series[t] / series[t - 1]);
        series = returns;
      }
      return std::make_unique<GarchModel>(series, GarchModel::preset_prior(flags.prior),
                                          garch_options(flags));
    }
  }
  throw std::logic_error("load_model: unreachable");
}

HmcConfig to_hmc_config(const HmcFlags& flags, std::uint64_t seed) {
  HmcConfig cfg;
  cfg.chains = flags.chains;
  cfg.iterations = flags.iterations;
  cfg.warmup = flags.warmup;
  cfg.step_size = flags.step_size;
  cfg.num_leapfrog = flags.leapfrog;
  cfg.target_accept = flags.target_accept;
  cfg.seed = seed;
  return cfg;
}

void add_model_config(std::map<std::string, std::string>& config, const ModelFlags& flags) {
  config["model"] = flags.model;
  config["prior"] = std::to_string(flags.prior);
  if (flags.model == "garch") {
    config["error_family"] = flags.error_family;
    config["nu"] = std::to_string(flags.nu);
    config["sigma2_init"] = std::to_string(flags.sigma2_init);
    config["log_returns"] = flags.log_returns ? "1" : "0";
  }
}

void add_hmc_config(std::map<std::string, std::string>& config, const HmcFlags& flags) {
  config["chains"] = std::to_string(flags.chains);
  config["iterations"] = std::to_string(flags.iterations);
  config["warmup"] = std::to_string(flags.warmup);
  config["step_size"] = std::to_string(flags.step_size);
  config["leapfrog"] = std::to_string(flags.leapfrog);
  config["target_accept"] = std::to_string(flags.target_accept);
}

void write_draws(const std::string& out_dir, const PosteriorSample& sample) {
  for (int c = 0; c < sample.chains; ++c) {
    const Matrix chain = sample.chain(c);
    write_csv(out_dir + "/draws_chain_" + std::to_string(c + 1) + ".csv", sample.param_names,
              chain);
  }
}

void write_summary(const std::string& out_dir, const PosteriorSample& sample) {
  Matrix summary(sample.num_params(), 4);
  for (Index j = 0; j < sample.num_params(); ++j) {
    const auto col = sample.draws.col(j);
    const double mean = col.mean();
    summary(j, 0) = mean;
    summary(j, 1) = std::sqrt((col.array() - mean).square().sum() /
                              std::max<double>(1.0, static_cast<double>(col.size() - 1)));
    summary(j, 2) = sample.rhat[j];
    summary(j, 3) = sample.ess[j];
  }
  std::ostringstream out;
  out << "parameter,mean,sd,rhat,ess\n";
  char buf[40];
  for (Index j = 0; j < sample.num_params(); ++j) {
    out << sample.param_names[static_cast<size_t>(j)];
    for (Index c = 0; c < 4; ++c) {
      std::snprintf(buf, sizeof(buf), "%.10g", summary(j, c));
      out << ',' << buf;
    }
    out << '\n';
  }
  write_text_file(out_dir + "/summary.csv", out.str());
}

Matrix load_draws(const std::string& draws_dir, const TargetModel& model) {
  std::vector<std::pair<int, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(draws_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("draws_chain_", 0) == 0 && name.ends_with(".csv"))
      files.emplace_back(std::atoi(name.c_str() + 12), entry.path());
  }
  if (files.empty()) throw std::runtime_error("no draws_chain_*.csv found in '" + draws_dir + "'");
  std::sort(files.begin(), files.end());

  std::vector<CsvTable> chains;
  Index total = 0;
  for (const auto& [chain_no, f] : files) {
    chains.push_back(read_csv(f.string()));
    if (chains.back().cols() != model.dim())
      throw std::runtime_error("draws/parameter-count mismatch: '" + f.string() + "' has " +
                               std::to_string(chains.back().cols()) +
                               " columns, the model expects " + std::to_string(model.dim()));
    total += chains.back().rows();
  }
  Matrix draws(total, model.dim());
  Index row = 0;
  for (const auto& c : chains) {
    draws.middleRows(row, c.rows()) = c.values;
    row += c.rows();
  }
  return draws;
}

void print_top10(const DivergenceReport& report) {
  std::vector<Index> order(static_cast<size_t>(report.normalized.size()));
  for (size_t k = 0; k < order.size(); ++k) order[k] = static_cast<Index>(k);
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return report.normalized[a] > report.normalized[b]; });
  std::printf("top observations by normalized divergence (threshold %.6f):\n", report.threshold);
  std::printf("%6s %14s %14s %6s\n", "obs", "raw", "normalized", "flag");
  const size_t top = std::min<size_t>(10, order.size());
  for (size_t k = 0; k < top; ++k) {
    const Index i = order[k];
    const int obs = report.obs_ids[static_cast<size_t>(i)];
    const bool flagged =
        std::find(report.flagged.begin(), report.flagged.end(), obs) != report.flagged.end();
    std::printf("%6d %14.6g %14.6g %6s\n", obs, report.raw[i], report.normalized[i],
                flagged ? "*" : "");
  }
}

ScenarioConfig scenario_from_config(const KeyValueConfig& kv, Scenario scenario) {
  ScenarioConfig cfg;
  cfg.model = model_kind_from_string(kv.get_string("model"));
  const auto tp = kv.get_doubles("true_params");
  cfg.true_params = Eigen::Map<const Vector>(tp.data(), static_cast<Index>(tp.size()));
  cfg.sigma2 = kv.get_double("sigma2", 1.0);
  cfg.n = static_cast<int>(kv.get_int("n", 100));
  cfg.prior_id = static_cast<int>(kv.get_int("prior", 1));
  cfg.scenario = scenario;
  if (kv.has("watched")) cfg.watched = kv.get_ints("watched");
  cfg.replications = static_cast<int>(kv.get_int("replications", 50));
  cfg.master_seed = kv.get_uint("seed", 1);
  cfg.hmc.chains = static_cast<int>(kv.get_int("chains", 2));
  cfg.hmc.iterations = static_cast<int>(kv.get_int("iterations", 2000));
  cfg.hmc.warmup = static_cast<int>(kv.get_int("warmup", 1000));
  cfg.hmc.step_size = kv.get_double("step_size", 0.1);
  cfg.hmc.num_leapfrog = static_cast<int>(kv.get_int("leapfrog", 32));
  cfg.hmc.target_accept = kv.get_double("target_accept", 0.8);
  cfg.garch_burnin = static_cast<int>(kv.get_int("garch_burnin", 500));
  if (kv.get_string("error_family", "normal") == "t")
    cfg.garch.error_family = GarchModel::ErrorFamily::student_t;
  cfg.garch.nu = kv.get_double("nu", 5.0);
  cfg.influence.alpha = kv.get_double("alpha", 1.0);
  cfg.influence.estimator =
      kv.get_string("estimator", "kl") == "alpha" ? Estimator::general_alpha : Estimator::kl_fast;
  cfg.influence.multiplier = kv.get_double("multiplier", 1.0);
  return cfg;
}

}  // namespace

int cmd_fit(const FitOptions& opts) {
  Stopwatch watch;
  const auto model = load_model(opts.data_path, opts.model);
  const auto sample = run_chains(
      *model, to_hmc_config(opts.hmc, opts.seed), {},
      [&model](const Vector& u) { return model->to_natural(u); }, model->param_names(),
      opts.workers);

  fs::create_directories(opts.out_dir);
  write_draws(opts.out_dir, sample);
  write_summary(opts.out_dir, sample);

  RunManifest manifest;
  manifest.command = "fit";
  manifest.config["data"] = opts.data_path;
  add_model_config(manifest.config, opts.model);
  add_hmc_config(manifest.config, opts.hmc);
  manifest.seed = opts.seed;
  manifest.timing_seconds = watch.seconds();
  manifest.write(opts.out_dir);

  bool rhat_warning = false;
  for (Index j = 0; j < sample.rhat.size(); ++j) {
    if (std::isfinite(sample.rhat[j]) && sample.rhat[j] > opts.rhat_warn) rhat_warning = true;
    std::printf("%-10s mean %10.4f  rhat %7.4f  ess %8.1f\n",
                sample.param_names[static_cast<size_t>(j)].c_str(), sample.draws.col(j).mean(),
                sample.rhat[j], sample.ess[j]);
  }
  for (int c = 0; c < sample.chains; ++c)
    std::printf("chain %d: accept %.3f, %d divergences, step size %.3g\n", c + 1,
                sample.accept_rate[c], sample.divergences[c], sample.step_size[c]);
  if (rhat_warning) {
    std::fprintf(stderr, "warning: rhat above %.3f; chains may not have converged\n",
                 opts.rhat_warn);
    return 2;
  }
  return 0;
}

int cmd_diagnose(const DiagnoseOptions& opts) {
  Stopwatch watch;
  const auto model = load_model(opts.data_path, opts.model);

  Matrix draws;
  if (!opts.draws_dir.empty()) {
    draws = load_draws(opts.draws_dir, *model);
  } else {
    draws = fit_model(*model, to_hmc_config(opts.hmc, opts.seed)).draws;
  }

  InfluenceOptions inf;
  inf.alpha = opts.alpha;
  if (opts.estimator == "alpha")
    inf.estimator = Estimator::general_alpha;
  else if (opts.estimator != "kl")
    throw std::runtime_error("unknown estimator '" + opts.estimator + "' (valid: kl, alpha)");
  inf.multiplier = opts.multiplier;
  inf.workers = opts.workers;
  const auto report = influence_report(*model, draws, inf);

  fs::create_directories(opts.out_dir);
  write_text_file(opts.out_dir + "/divergence.json", report_to_json(report));
  write_text_file(opts.out_dir + "/divergence.csv", report_to_csv(report));

  RunManifest manifest;
  manifest.command = "diagnose";
  manifest.config["data"] = opts.data_path;
  add_model_config(manifest.config, opts.model);
  manifest.config["alpha"] = std::to_string(opts.alpha);
  manifest.config["estimator"] = opts.estimator;
  manifest.config["multiplier"] = std::to_string(opts.multiplier);
  if (opts.draws_dir.empty()) add_hmc_config(manifest.config, opts.hmc);
  manifest.config["draws"] = opts.draws_dir;
  manifest.seed = opts.seed;
  manifest.timing_seconds = watch.seconds();
  manifest.write(opts.out_dir);

  print_top10(report);
  std::printf("%zu observation(s) flagged above %.1f/n\n", report.flagged.size(), opts.multiplier);
  if (report.low_iw_ess)
    std::fprintf(stderr,
                 "warning: importance-weight effective sample size below 5%% of the draws; "
                 "the marginal-density estimate may be unstable\n");
  return 0;
}

int cmd_simulate(const SimulateOptions& opts) {
  Stopwatch watch;
  KeyValueConfig kv = KeyValueConfig::from_file(opts.config_path);
  if (opts.seed_override) kv.set("seed", std::to_string(opts.seed));

  const std::string study = kv.get_string("study");
  fs::create_directories(opts.out_dir);

  RunManifest manifest;
  manifest.command = "simulate";
  manifest.config = kv.entries();
  manifest.config["workers"] = "";  // worker count must not affect results
  manifest.seed = kv.get_uint("seed", 1);

  if (study == "bias") {
    const auto cfg = scenario_from_config(kv, Scenario::I);
    const auto table = run_bias_study(cfg, opts.workers);
    write_text_file(opts.out_dir + "/bias_table.csv", bias_table_to_csv(table));
    write_text_file(opts.out_dir + "/bias_table.txt", bias_table_to_text(table));
    std::printf("%s", bias_table_to_text(table).c_str());
  } else if (study == "influence") {
    std::vector<InfluenceStudyTable> tables;
    for (const auto& label : kv.get_strings("scenarios")) {
      const auto cfg = scenario_from_config(kv, scenario_from_string(label));
      tables.push_back(run_influence_study(cfg, opts.workers));
    }
    write_text_file(opts.out_dir + "/influence_table.csv", influence_table_to_csv(tables));
    write_text_file(opts.out_dir + "/influence_table.txt", influence_table_to_text(tables));
    std::printf("%s", influence_table_to_text(tables).c_str());
  } else {
    throw std::runtime_error(opts.config_path + ": field 'study': unknown study '" + study +
                             "' (valid: bias, influence)");
  }

  manifest.timing_seconds = watch.seconds();
  manifest.write(opts.out_dir);
  return 0;
}

namespace {

std::string csv_as_markdown(const std::string& path) {
  const RawCsv table = read_csv_raw(path);
  std::ostringstream out;
  out << '|';
  for (const auto& h : table.header) out << ' ' << h << " |";
  out << "\n|";
  for (size_t j = 0; j < table.header.size(); ++j) out << " --- |";
  out << '\n';
  for (const auto& row : table.rows) {
    out << '|';
    for (const auto& cell : row) out << ' ' << cell << " |";
    out << '\n';
  }
  return out.str();
}

}  // namespace

int cmd_report(const ReportOptions& opts) {
  if (opts.run_dirs.empty()) throw std::runtime_error("report: no run directories given");

  std::ostringstream md;
  md << "# Run report\n";
  std::vector<std::pair<std::string, CsvTable>> divergences;

  for (const auto& dir : opts.run_dirs) {
    const RunManifest manifest = read_manifest(dir);
    md << "\n## " << dir << "\n\n";
    md << "- command: `" << manifest.command << "`\n";
    md << "- config digest: `" << manifest.config_digest() << "`\n";
    md << "- seed: " << manifest.seed << "\n";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f", manifest.timing_seconds);
    md << "- wall clock: " << buf << " s\n\n";

    for (const char* table : {"summary.csv", "bias_table.csv", "influence_table.csv"}) {
      const std::string path = dir + "/" + table;
      if (fs::exists(path)) md << "### " << table << "\n\n" << csv_as_markdown(path) << '\n';
    }
    const std::string div_path = dir + "/divergence.csv";
    if (fs::exists(div_path)) {
      divergences.emplace_back(dir, read_csv(div_path));
      if (opts.run_dirs.size() == 1)
        md << "### divergence.csv\n\n" << csv_as_markdown(div_path) << '\n';
    }
  }

  if (divergences.size() >= 2) {
    // join per-observation divergences on the observation id
    const auto& base = divergences.front().second;
    for (const auto& [dir, table] : divergences) {
      if (table.rows() != base.rows() ||
          (table.values.col(0) - base.values.col(0)).lpNorm<Eigen::Infinity>() != 0.0)
        throw std::runtime_error("report: observation ids in '" + dir + "/divergence.csv' do not "
                                 "match '" + divergences.front().first + "/divergence.csv'");
    }
    md << "\n## Normalized divergence comparison\n\n| obs |";
    for (const auto& [dir, table] : divergences) md << ' ' << dir << " |";
    md << "\n| --- |";
    for (size_t r = 0; r < divergences.size(); ++r) md << " --- |";
    md << '\n';
    char buf[40];
    for (Index i = 0; i < base.rows(); ++i) {
      md << "| " << static_cast<int>(base.values(i, 0)) << " |";
      for (const auto& [dir, table] : divergences) {
        std::snprintf(buf, sizeof(buf), "%.6g", table.values(i, 2));
        md << ' ' << buf << " |";
      }
      md << '\n';
    }
    md << "\nHighest values:\n";
    for (const auto& [dir, table] : divergences) {
      Index best = 0;
      table.values.col(2).maxCoeff(&best);
      std::snprintf(buf, sizeof(buf), "%.6g", table.values(best, 2));
      md << "- " << dir << ": observation " << static_cast<int>(table.values(best, 0)) << " at "
         << buf << '\n';
    }
  }

  write_text_file(opts.out_path, md.str());
  std::printf("wrote %s\n", opts.out_path.c_str());
  return 0;
}

}  // namespace bregdiag::cli
