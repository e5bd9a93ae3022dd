#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bregdiag/rng.hpp"
#include "bregdiag/target.hpp"
#include "bregdiag/types.hpp"

namespace bregdiag {

struct HmcConfig {
  double step_size = 0.1;       // initial epsilon; adapted during warmup
  int num_leapfrog = 32;        // base L, jittered per iteration
  Vector mass_diag;             // diagonal of V; empty = ones
  int warmup = 1000;
  int iterations = 2000;        // total per chain, warmup included
  int chains = 2;
  double target_accept = 0.8;
  std::uint64_t seed = 0;
  bool adapt_mass = true;
  bool adapt_step = true;
  bool jitter_length = true;

  void validate(int dim) const;
};

/// Phase-space point with cached energies. H = potential + kinetic.
struct PhaseState {
  Vector position;
  Vector momentum;
  double potential = 0.0;
  double kinetic = 0.0;
  bool divergent = false;

  double hamiltonian() const { return potential + kinetic; }
};

PhaseState make_phase_state(const Vector& position, const Vector& momentum,
                            const TargetDensity& target, const Vector& mass_diag);

/// Half-kick / drift / half-kick scheme applied n_steps times with kinetic
/// metric V^-1 = diag(1/mass_diag). Flags divergent when U or the gradient
/// turns non-finite mid-trajectory.
PhaseState leapfrog(const PhaseState& state, double eps, int n_steps, const TargetDensity& target,
                    const Vector& mass_diag);

struct StepResult {
  Vector theta;
  bool accepted = false;
  bool divergent = false;
  double accept_prob = 0.0;   // min(1, exp(H_start - H_end)); 0 when divergent
  double energy_error = 0.0;  // H_end - H_start
};

/// One HMC transition: sample momentum ~ N(0, diag(mass_diag)), integrate,
/// Metropolis-correct. Trajectory length is jittered in [ceil(0.8L),
/// ceil(1.2L)] when cfg.jitter_length is set.
StepResult hmc_step(const Vector& theta, const HmcConfig& cfg, const TargetDensity& target,
                    Rng& rng);

/// Transitions with |H_end - H_start| above this count as divergent.
inline constexpr double kDivergenceThreshold = 1000.0;

/// Nesterov dual averaging on log(eps) targeting a mean acceptance rate.
/// The anchor mu is log of the initial step size, so constant acceptance at
/// target is a fixed point at the initial value.
class DualAveraging {
 public:
  DualAveraging(double initial_step, double target_accept);

  /// Feed one acceptance probability; returns the step size to use next.
  double update(double accept_prob);

  double current() const { return eps_; }
  /// Smoothed estimate, frozen at the end of warmup.
  double averaged() const { return eps_bar_; }
  void restart(double initial_step);

 private:
  double target_;
  double mu_;
  double eps_;
  double eps_bar_;
  double h_bar_ = 0.0;
  int t_ = 0;
};

struct PosteriorSample {
  Matrix draws;  // S x d, post-warmup, chains stacked in chain order
  int chains = 0;
  int iters_per_chain = 0;  // post-warmup draws per chain
  std::vector<std::string> param_names;
  Vector accept_rate;            // per chain, post-warmup
  std::vector<int> divergences;  // per chain, post-warmup
  Vector step_size;              // per chain, frozen after warmup
  Vector rhat;                   // per coordinate; NaN when chains < 2
  Vector ess;                    // per coordinate

  Index num_draws() const { return draws.rows(); }
  Index num_params() const { return draws.cols(); }
  /// View of one chain's draws.
  Eigen::Block<const Matrix> chain(int c) const {
    return draws.block(c * iters_per_chain, 0, iters_per_chain, draws.cols());
  }
};

/// Runs cfg.chains independent chains with per-chain RNG streams derived from
/// (seed, chain). Warmup adapts eps by dual averaging and refreshes the
/// diagonal mass once mid-warmup; post-warmup draws are stored after applying
/// report_transform (e.g. unconstrained -> natural). Deterministic given the
/// seed, regardless of worker count.
PosteriorSample run_chains(const TargetDensity& target, const HmcConfig& cfg,
                           const std::vector<Vector>& init = {},
                           const std::function<Vector(const Vector&)>& report_transform = nullptr,
                           const std::vector<std::string>& param_names = {}, int workers = 0);

}  // namespace bregdiag
