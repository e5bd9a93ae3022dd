#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "commands.hpp"
#include "manifest.hpp"

namespace cli = bregdiag::cli;

namespace {

void add_hmc_flags(CLI::App* cmd, cli::HmcFlags& flags) {
  cmd->add_option("--chains", flags.chains, "number of chains")->check(CLI::PositiveNumber);
  cmd->add_option("--iters", flags.iterations, "iterations per chain, warmup included")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--warmup", flags.warmup, "warmup iterations discarded per chain")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--step-size", flags.step_size, "initial leapfrog step size")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--leapfrog", flags.leapfrog, "base trajectory length (jittered +/-20%)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--target-accept", flags.target_accept, "dual-averaging acceptance target");
}

void add_model_flags(CLI::App* cmd, cli::ModelFlags& flags) {
  cmd->add_option("--model", flags.model, "model kind")
      ->check(CLI::IsMember({"logistic", "spatial", "garch"}))
      ->required();
  cmd->add_option("--prior", flags.prior, "prior preset (1, 2 or 3)")->check(CLI::Range(1, 3));
  cmd->add_option("--error-family", flags.error_family, "garch errors: normal or t")
      ->check(CLI::IsMember({"normal", "t"}));
  cmd->add_option("--nu", flags.nu, "Student-t degrees of freedom");
  cmd->add_option("--sigma2-init", flags.sigma2_init,
                  "garch sigma2_1 (default: sample variance of the series)");
  cmd->add_flag("--log-returns", flags.log_returns,
                "garch input column holds prices; convert via log(p_t / p_{t-1})");
  cmd->add_flag("--keep-deleted-in-path", flags.keep_deleted_in_path,
                "garch deletion drops only the likelihood term, leaving the "
                "volatility recursion on the observed series");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian influence diagnostics: HMC posterior sampling with "
               "normalized Bregman divergence scores"};
  app.set_version_flag("--version", cli::kToolVersion);
  app.require_subcommand(1);

  cli::FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "sample a posterior from a CSV dataset");
  fit_cmd->add_option("--data", fit.data_path, "input CSV (see FORMATS.md)")->required();
  add_model_flags(fit_cmd, fit.model);
  add_hmc_flags(fit_cmd, fit.hmc);
  fit_cmd->add_option("--seed", fit.seed, "RNG seed");
  fit_cmd->add_option("--out", fit.out_dir, "output directory");
  fit_cmd->add_option("--rhat-warn", fit.rhat_warn, "exit 2 when any rhat exceeds this");
  fit_cmd->add_option("--workers", fit.workers, "parallel workers over chains");

  cli::DiagnoseOptions diag;
  auto* diag_cmd =
      app.add_subcommand("diagnose", "score per-observation influence from posterior draws");
  diag_cmd->add_option("--data", diag.data_path, "input CSV (see FORMATS.md)")->required();
  add_model_flags(diag_cmd, diag.model);
  diag_cmd->add_option("--draws", diag.draws_dir,
                       "directory with draws_chain_*.csv from a previous fit (omit to refit)");
  add_hmc_flags(diag_cmd, diag.hmc);
  diag_cmd->add_option("--seed", diag.seed, "RNG seed for refits");
  diag_cmd->add_option("--alpha", diag.alpha, "convex-family exponent");
  diag_cmd->add_option("--estimator", diag.estimator, "kl (fast path) or alpha (general)")
      ->check(CLI::IsMember({"kl", "alpha"}));
  diag_cmd->add_option("--multiplier", diag.multiplier, "flag observations above multiplier/n");
  diag_cmd->add_option("--workers", diag.workers, "parallel workers over observations");
  diag_cmd->add_option("--out", diag.out_dir, "output directory");

  cli::SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "run a replication study from a config file");
  sim_cmd->add_option("--config", sim.config_path, "study config (key = value)")->required();
  sim_cmd->add_option("--out", sim.out_dir, "output directory");
  sim_cmd->add_option("--workers", sim.workers, "parallel workers over replications");
  auto* seed_opt = sim_cmd->add_option("--seed", sim.seed, "override the config seed");

  cli::ReportOptions rep;
  auto* rep_cmd = app.add_subcommand("report", "merge run directories into a markdown report");
  rep_cmd->add_option("dirs", rep.run_dirs, "completed run directories")->required();
  rep_cmd->add_option("--out", rep.out_path, "output markdown path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit_cmd) return cli::cmd_fit(fit);
    if (*diag_cmd) return cli::cmd_diagnose(diag);
    if (*sim_cmd) {
      sim.seed_override = seed_opt->count() > 0;
      return cli::cmd_simulate(sim);
    }
    if (*rep_cmd) return cli::cmd_report(rep);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
