#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bregdiag::cli {

struct HmcFlags {
  int chains = 2;
  int iterations = 2000;
  int warmup = 1000;
  double step_size = 0.1;
  int leapfrog = 32;
  double target_accept = 0.8;
};

struct ModelFlags {
  std::string model = "logistic";
  int prior = 1;
  std::string error_family = "normal";  // garch: normal | t
  double nu = 5.0;
  double sigma2_init = -1.0;  // garch: <= 0 means sample variance
  bool log_returns = false;   // garch: input column holds prices
  bool keep_deleted_in_path = false;  // garch deletion: drop the term only
};

struct FitOptions {
  std::string data_path;
  std::string out_dir = "fit_out";
  ModelFlags model;
  HmcFlags hmc;
  std::uint64_t seed = 1;
  double rhat_warn = 1.1;
  int workers = 2;
};

struct DiagnoseOptions {
  std::string data_path;
  std::string draws_dir;  // empty => refit
  std::string out_dir = "diagnose_out";
  ModelFlags model;
  HmcFlags hmc;
  std::uint64_t seed = 1;
  double alpha = 1.0;
  std::string estimator = "kl";  // kl | alpha
  double multiplier = 1.0;
  int workers = 2;
};

struct SimulateOptions {
  std::string config_path;
  std::string out_dir = "simulate_out";
  int workers = 2;
  bool seed_override = false;
  std::uint64_t seed = 0;
};

struct ReportOptions {
  std::vector<std::string> run_dirs;
  std::string out_path = "report.md";
};

int cmd_fit(const FitOptions& opts);
int cmd_diagnose(const DiagnoseOptions& opts);
int cmd_simulate(const SimulateOptions& opts);
int cmd_report(const ReportOptions& opts);

}  // namespace bregdiag::cli
