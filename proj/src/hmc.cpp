#include "bregdiag/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bregdiag/diagnostics.hpp"
#include "bregdiag/parallel.hpp"

namespace bregdiag {

namespace {

constexpr double kEpsMin = 1e-8;
constexpr double kEpsMax = 1e3;

double kinetic_energy(const Vector& momentum, const Vector& mass_diag) {
  // K = 1/2 phi' V^-1 phi with V = diag(mass_diag)
  return 0.5 * (momentum.array().square() / mass_diag.array()).sum();
}

bool all_finite(const Vector& v) { return v.allFinite(); }

struct ChainResult {
  Matrix draws;
  double accept_rate = 0.0;
  int divergences = 0;
  double step_size = 0.0;
};

}  // namespace

void HmcConfig::validate(int dim) const {
  if (step_size <= 0.0) throw std::invalid_argument("HmcConfig: step_size must be positive");
  if (num_leapfrog < 1) throw std::invalid_argument("HmcConfig: num_leapfrog must be positive");
  if (iterations < 1) throw std::invalid_argument("HmcConfig: iterations must be positive");
  if (warmup < 0) throw std::invalid_argument("HmcConfig: warmup must be nonnegative");
  if (chains < 1) throw std::invalid_argument("HmcConfig: chains must be positive");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw std::invalid_argument("HmcConfig: target_accept must lie in (0, 1)");
  if (mass_diag.size() != 0) {
    if (mass_diag.size() != dim) throw std::invalid_argument("HmcConfig: mass_diag size mismatch");
    if ((mass_diag.array() <= 0.0).any())
      throw std::invalid_argument("HmcConfig: mass_diag entries must be positive");
  }
}

PhaseState make_phase_state(const Vector& position, const Vector& momentum,
                            const TargetDensity& target, const Vector& mass_diag) {
  PhaseState s;
  s.position = position;
  s.momentum = momentum;
  s.potential = -target.log_density(position);
  s.kinetic = kinetic_energy(momentum, mass_diag);
  s.divergent = !std::isfinite(s.potential) || !std::isfinite(s.kinetic);
  return s;
}

PhaseState leapfrog(const PhaseState& state, double eps, int n_steps, const TargetDensity& target,
                    const Vector& mass_diag) {
  if (eps < 0.0) throw std::invalid_argument("leapfrog: eps must be nonnegative");
  if (n_steps < 1) throw std::invalid_argument("leapfrog: n_steps must be positive");

  Vector theta = state.position;
  Vector phi = state.momentum;
  auto diverged = [&](const PhaseState& from) {
    PhaseState bad = from;
    bad.divergent = true;
    return bad;
  };

  Vector grad = target.grad_log_density(theta);
  if (!all_finite(grad)) return diverged(state);

  for (int step = 0; step < n_steps; ++step) {
    // grad U = -grad log density
    phi.array() += 0.5 * eps * grad.array();
    theta.array() += eps * phi.array() / mass_diag.array();
    grad = target.grad_log_density(theta);
    if (!all_finite(theta) || !all_finite(grad)) return diverged(state);
    phi.array() += 0.5 * eps * grad.array();
  }

  PhaseState out = make_phase_state(theta, phi, target, mass_diag);
  if (!std::isfinite(out.potential)) return diverged(state);
  return out;
}

StepResult hmc_step(const Vector& theta, const HmcConfig& cfg, const TargetDensity& target,
                    Rng& rng) {
  const Index d = theta.size();
  Vector mass = cfg.mass_diag.size() ? cfg.mass_diag : Vector::Ones(d);

  Vector phi(d);
  for (Index j = 0; j < d; ++j) phi[j] = rng.normal() * std::sqrt(mass[j]);

  int n_steps = cfg.num_leapfrog;
  if (cfg.jitter_length) {
    const int lo = static_cast<int>(std::ceil(0.8 * cfg.num_leapfrog));
    const int hi = static_cast<int>(std::ceil(1.2 * cfg.num_leapfrog));
    n_steps = rng.uniform_int(lo, hi);
  }

  const PhaseState start = make_phase_state(theta, phi, target, mass);
  StepResult res;
  res.theta = theta;
  if (start.divergent) {
    res.divergent = true;
    return res;
  }

  const PhaseState end = leapfrog(start, cfg.step_size, n_steps, target, mass);
  res.energy_error = end.hamiltonian() - start.hamiltonian();
  if (end.divergent || !std::isfinite(res.energy_error) ||
      std::abs(res.energy_error) > kDivergenceThreshold) {
    res.divergent = true;
    res.accept_prob = 0.0;
    rng.uniform01();  // keep the stream layout identical on divergence
    return res;
  }

  res.accept_prob = std::min(1.0, std::exp(-res.energy_error));
  if (rng.uniform01() < res.accept_prob) {
    res.theta = end.position;
    res.accepted = true;
  }
  return res;
}

DualAveraging::DualAveraging(double initial_step, double target_accept)
    : target_(target_accept),
      mu_(std::log(initial_step)),
      eps_(initial_step),
      eps_bar_(initial_step) {}

void DualAveraging::restart(double initial_step) {
  mu_ = std::log(initial_step);
  eps_ = initial_step;
  eps_bar_ = initial_step;
  h_bar_ = 0.0;
  t_ = 0;
}

double DualAveraging::update(double accept_prob) {
  static constexpr double kT0 = 10.0;
  static constexpr double kGamma = 0.05;
  static constexpr double kKappa = 0.75;

  ++t_;
  const double t = static_cast<double>(t_);
  h_bar_ = (1.0 - 1.0 / (t + kT0)) * h_bar_ + (target_ - accept_prob) / (t + kT0);
  double log_eps = mu_ - std::sqrt(t) / kGamma * h_bar_;
  log_eps = std::clamp(log_eps, std::log(kEpsMin), std::log(kEpsMax));
  const double eta = std::pow(t, -kKappa);
  const double log_eps_bar = eta * log_eps + (1.0 - eta) * std::log(eps_bar_);
  eps_ = std::exp(log_eps);
  eps_bar_ = std::exp(log_eps_bar);
  return eps_;
}

namespace {

Vector initial_point(const TargetDensity& target, Rng& rng, const Vector* given) {
  if (given) {
    if (given->size() != target.dim())
      throw std::invalid_argument("run_chains: init point dimension mismatch");
    if (std::isfinite(target.log_density(*given))) return *given;
    throw std::runtime_error("run_chains: log density not finite at the supplied init point");
  }
  for (int attempt = 0; attempt < 100; ++attempt) {
    Vector u(target.dim());
    for (Index j = 0; j < u.size(); ++j) u[j] = 4.0 * rng.uniform01() - 2.0;
    if (std::isfinite(target.log_density(u))) return u;
  }
  throw std::runtime_error("run_chains: failed to find a finite-density init in 100 tries");
}

ChainResult run_one_chain(const TargetDensity& target, const HmcConfig& cfg, std::uint64_t seed,
                          const Vector* given_init,
                          const std::function<Vector(const Vector&)>& report_transform) {
  Rng rng(seed);
  Vector theta = initial_point(target, rng, given_init);
  const Index d = target.dim();

  HmcConfig live = cfg;
  if (live.mass_diag.size() == 0) live.mass_diag = Vector::Ones(d);

  DualAveraging da(live.step_size, live.target_accept);
  const int kept = std::max(0, cfg.iterations - cfg.warmup);
  const int mass_refresh_at = cfg.adapt_mass && cfg.warmup >= 40 ? cfg.warmup / 2 : -1;
  const int window_start = cfg.warmup / 4;

  Matrix warm_window;
  if (mass_refresh_at > 0) warm_window.resize(mass_refresh_at - window_start, d);

  ChainResult out;
  Index report_dim = d;
  if (report_transform) report_dim = report_transform(theta).size();
  out.draws.resize(kept, report_dim);

  int accepted = 0;
  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    const bool in_warmup = iter <= cfg.warmup;
    const StepResult step = hmc_step(theta, live, target, rng);
    theta = step.theta;

    if (in_warmup) {
      if (cfg.adapt_step) live.step_size = da.update(step.accept_prob);
      if (mass_refresh_at > 0 && iter > window_start && iter <= mass_refresh_at)
        warm_window.row(iter - window_start - 1) = theta.transpose();
      if (iter == mass_refresh_at) {
        // V = diag(1 / var): momentum scale matches posterior curvature
        for (Index j = 0; j < d; ++j) {
          const auto col = warm_window.col(j);
          const double mean = col.mean();
          const double var = (col.array() - mean).square().sum() /
                             std::max<double>(1.0, static_cast<double>(col.size() - 1));
          live.mass_diag[j] = 1.0 / std::clamp(var, 1e-8, 1e8);
        }
        da.restart(std::clamp(da.averaged(), kEpsMin, kEpsMax));
      }
      if (iter == cfg.warmup && cfg.adapt_step)
        live.step_size = std::clamp(da.averaged(), kEpsMin, kEpsMax);
    } else {
      const int k = iter - cfg.warmup - 1;
      if (k < kept) {
        if (report_transform)
          out.draws.row(k) = report_transform(theta).transpose();
        else
          out.draws.row(k) = theta.transpose();
      }
      if (step.accepted) ++accepted;
      if (step.divergent) ++out.divergences;
    }
  }

  out.accept_rate = kept > 0 ? static_cast<double>(accepted) / kept : 0.0;
  out.step_size = live.step_size;
  return out;
}

}  // namespace

PosteriorSample run_chains(const TargetDensity& target, const HmcConfig& cfg,
                           const std::vector<Vector>& init,
                           const std::function<Vector(const Vector&)>& report_transform,
                           const std::vector<std::string>& param_names, int workers) {
  cfg.validate(target.dim());
  if (!init.empty() && static_cast<int>(init.size()) != cfg.chains)
    throw std::invalid_argument("run_chains: need one init point per chain");

  std::vector<ChainResult> results(cfg.chains);
  const int nworkers = workers > 0 ? workers : cfg.chains;
  parallel_for(cfg.chains, nworkers, [&](int c) {
    const Vector* given = init.empty() ? nullptr : &init[c];
    results[c] = run_one_chain(target, cfg, derive_seed(cfg.seed, static_cast<std::uint64_t>(c)),
                               given, report_transform);
  });

  const int kept = std::max(0, cfg.iterations - cfg.warmup);
  PosteriorSample sample;
  sample.chains = cfg.chains;
  sample.iters_per_chain = kept;
  sample.param_names = param_names;
  const Index report_dim = results.front().draws.cols();
  sample.draws.resize(static_cast<Index>(cfg.chains) * kept, report_dim);
  sample.accept_rate.resize(cfg.chains);
  sample.step_size.resize(cfg.chains);
  sample.divergences.resize(cfg.chains);
  for (int c = 0; c < cfg.chains; ++c) {
    sample.draws.block(static_cast<Index>(c) * kept, 0, kept, report_dim) = results[c].draws;
    sample.accept_rate[c] = results[c].accept_rate;
    sample.step_size[c] = results[c].step_size;
    sample.divergences[c] = results[c].divergences;
  }
  if (sample.param_names.empty()) {
    sample.param_names.reserve(report_dim);
    for (Index j = 0; j < report_dim; ++j)
      sample.param_names.push_back("theta" + std::to_string(j));
  }

  sample.rhat.resize(report_dim);
  sample.ess.resize(report_dim);
  for (Index j = 0; j < report_dim; ++j) {
    std::vector<Vector> per_chain;
    per_chain.reserve(cfg.chains);
    for (int c = 0; c < cfg.chains; ++c) per_chain.push_back(sample.chain(c).col(j));
    sample.rhat[j] = cfg.chains >= 2 ? split_rhat(per_chain)
                                     : std::numeric_limits<double>::quiet_NaN();
    sample.ess[j] = effective_sample_size(per_chain);
  }
  return sample;
}

double gradient_check(const TargetDensity& target, const std::vector<Vector>& points) {
  double worst = 0.0;
  for (const auto& p : points) {
    const Vector analytic = target.grad_log_density(p);
    for (Index j = 0; j < p.size(); ++j) {
      const double h = 1e-5 * (1.0 + std::abs(p[j]));
      Vector hi = p, lo = p;
      hi[j] += h;
      lo[j] -= h;
      const double fd = (target.log_density(hi) - target.log_density(lo)) / (2.0 * h);
      const double scale = std::max({std::abs(analytic[j]), std::abs(fd), 1.0});
      worst = std::max(worst, std::abs(analytic[j] - fd) / scale);
    }
  }
  return worst;
}

}  // namespace bregdiag

