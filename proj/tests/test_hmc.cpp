#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bregdiag/diagnostics.hpp"
#include "bregdiag/hmc.hpp"
#include "support/oracles.hpp"
#include "support/targets.hpp"

using namespace bregdiag;

TEST_CASE("leapfrog with zero step size is the identity") {
  StdNormalTarget target(1);
  Vector theta(1), phi(1);
  theta << 1.0;
  phi << 0.0;
  const auto start = make_phase_state(theta, phi, target, Vector::Ones(1));
  const auto end = leapfrog(start, 0.0, 5, target, Vector::Ones(1));
  CHECK(end.position[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(end.momentum[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(end.hamiltonian() == doctest::Approx(start.hamiltonian()).epsilon(1e-15));
}

TEST_CASE("leapfrog hand execution on a 1D standard normal") {
  // phi_half = 1, theta' = 0.1, phi' = 1 - 0.05 * 0.1 = 0.995
  StdNormalTarget target(1);
  Vector theta(1), phi(1);
  theta << 0.0;
  phi << 1.0;
  const auto start = make_phase_state(theta, phi, target, Vector::Ones(1));
  const auto end = leapfrog(start, 0.1, 1, target, Vector::Ones(1));
  CHECK(end.position[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(end.momentum[0] == doctest::Approx(0.995).epsilon(1e-15));
  CHECK_FALSE(end.divergent);
}

TEST_CASE("leapfrog reversibility") {
  StdNormalTarget target(3);
  Rng rng(7);
  const Vector mass = (Vector(3) << 1.0, 2.0, 0.5).finished();
  for (int rep = 0; rep < 20; ++rep) {
    const Vector theta = rng.normal_vector(3);
    const Vector phi = rng.normal_vector(3);
    const auto start = make_phase_state(theta, phi, target, mass);
    auto fwd = leapfrog(start, 0.05, 20, target, mass);
    fwd.momentum = -fwd.momentum;
    auto back = leapfrog(fwd, 0.05, 20, target, mass);
    back.momentum = -back.momentum;
    CHECK((back.position - theta).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((back.momentum - phi).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("one leapfrog step preserves phase-space volume") {
  // 2x2 Jacobian of (theta, phi) -> (theta', phi') by central differences
  StdNormalTarget target(1);
  const Vector mass = Vector::Ones(1);
  const double eps = 0.2;
  auto step = [&](double th, double ph) {
    Vector t(1), p(1);
    t << th;
    p << ph;
    const auto out = leapfrog(make_phase_state(t, p, target, mass), eps, 1, target, mass);
    return std::pair<double, double>(out.position[0], out.momentum[0]);
  };
  const double h = 1e-5;
  const double th0 = 0.8, ph0 = -0.4;
  const auto [tp, pp] = step(th0 + h, ph0);
  const auto [tm, pm] = step(th0 - h, ph0);
  const auto [tp2, pp2] = step(th0, ph0 + h);
  const auto [tm2, pm2] = step(th0, ph0 - h);
  const double j11 = (tp - tm) / (2 * h), j12 = (tp2 - tm2) / (2 * h);
  const double j21 = (pp - pm) / (2 * h), j22 = (pp2 - pm2) / (2 * h);
  const double det = j11 * j22 - j12 * j21;
  CHECK(std::abs(det - 1.0) < 1e-6);
}

TEST_CASE("leapfrog flags divergent trajectories") {
  CliffTarget target;  // gradient turns NaN past the cliff
  Vector theta(1), phi(1);
  theta << 2.5;
  phi << 3.0;
  const auto start = make_phase_state(theta, phi, target, Vector::Ones(1));
  const auto end = leapfrog(start, 1.0, 10, target, Vector::Ones(1));
  CHECK(end.divergent);
}

TEST_CASE("hmc_step with eps = 0 always accepts the unmoved point") {
  StdNormalTarget target(2);
  HmcConfig cfg;
  cfg.step_size = 0.0;
  cfg.num_leapfrog = 4;
  Rng rng(1);
  Vector theta(2);
  theta << 0.3, -0.8;
  for (int i = 0; i < 50; ++i) {
    const auto res = hmc_step(theta, cfg, target, rng);
    CHECK(res.accepted);
    CHECK(res.theta == theta);
    CHECK(res.energy_error == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("hmc_step long-run acceptance on a 2D standard normal") {
  StdNormalTarget target(2);
  HmcConfig cfg;
  cfg.step_size = 0.5;
  cfg.num_leapfrog = 8;
  cfg.jitter_length = false;
  Rng rng(20240812);
  Vector theta = Vector::Zero(2);
  int accepted = 0;
  const int steps = 10000;
  for (int i = 0; i < steps; ++i) {
    const auto res = hmc_step(theta, cfg, target, rng);
    theta = res.theta;
    accepted += res.accepted ? 1 : 0;
  }
  const double rate = static_cast<double>(accepted) / steps;
  CHECK(rate > 0.6);
  CHECK(rate < 0.999);
}

TEST_CASE("leapfrog energy error scales as O(eps^2)") {
  StdNormalTarget target(1);
  const Vector mass = Vector::Ones(1);
  Vector theta(1), phi(1);
  theta << 1.3;
  phi << 0.7;
  const auto start = make_phase_state(theta, phi, target, mass);
  const double err1 = std::abs(leapfrog(start, 0.1, 20, target, mass).hamiltonian() -
                               start.hamiltonian());
  const double err2 = std::abs(leapfrog(start, 0.05, 40, target, mass).hamiltonian() -
                               start.hamiltonian());
  const double ratio = err1 / err2;
  CHECK(ratio > 4.0 * 0.7);
  CHECK(ratio < 4.0 * 1.3);
}

TEST_CASE("dual averaging fixed point at constant on-target acceptance") {
  DualAveraging da(0.25, 0.8);
  for (int i = 0; i < 500; ++i) da.update(0.8);
  CHECK(da.current() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(da.averaged() == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("dual averaging decreases the step monotonically under all-reject") {
  DualAveraging da(0.5, 0.8);
  double prev = 0.5;
  for (int i = 0; i < 200; ++i) {
    const double eps = da.update(0.0);
    CHECK(eps <= prev);
    if (prev > 1e-8) CHECK(eps < prev);  // strict until the floor clamp binds
    prev = eps;
  }
  CHECK(prev == doctest::Approx(1e-8));
}

TEST_CASE("run_chains recovers a 2D standard normal") {
  StdNormalTarget target(2);
  HmcConfig cfg;
  cfg.chains = 2;
  cfg.iterations = 4000;
  cfg.warmup = 2000;
  cfg.seed = 99;
  const auto sample = run_chains(target, cfg);
  REQUIRE(sample.num_draws() == 4000);
  for (Index j = 0; j < 2; ++j) {
    const double mean = sample.draws.col(j).mean();
    const double var =
        (sample.draws.col(j).array() - mean).square().sum() / (sample.num_draws() - 1.0);
    const double mcse = std::sqrt(var / sample.ess[j]);
    CHECK(std::abs(mean) < 3.0 * mcse);
    CHECK(var > 0.85);
    CHECK(var < 1.15);
    CHECK(sample.rhat[j] < 1.05);
  }
  // dual averaging targeted 0.8
  for (int c = 0; c < 2; ++c) {
    CHECK(sample.accept_rate[c] > 0.65);
    CHECK(sample.accept_rate[c] < 0.95);
  }
}

TEST_CASE("run_chains is deterministic given the seed") {
  QuadraticTarget target((Vector(3) << 1.0, 0.25, 4.0).finished());
  HmcConfig cfg;
  cfg.chains = 2;
  cfg.iterations = 400;
  cfg.warmup = 200;
  cfg.seed = 1234;
  const auto a = run_chains(target, cfg);
  const auto b = run_chains(target, cfg);
  CHECK(a.draws == b.draws);
  CHECK(a.step_size == b.step_size);
  // worker count must not matter either
  const auto c = run_chains(target, cfg, {}, nullptr, {}, 1);
  CHECK((a.draws - c.draws).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("run_chains converges on an anisotropic quadratic target") {
  QuadraticTarget target((Vector(3) << 1.0, 0.5, 2.0).finished());
  HmcConfig cfg;
  cfg.chains = 2;
  cfg.iterations = 2000;
  cfg.warmup = 1000;
  cfg.seed = 4321;
  const auto sample = run_chains(target, cfg);
  for (Index j = 0; j < 3; ++j) CHECK(sample.rhat[j] < 1.05);
}

TEST_CASE("divergent trajectories are rejected and counted") {
  CliffTarget target;
  HmcConfig cfg;
  cfg.chains = 1;
  cfg.iterations = 300;
  cfg.warmup = 0;
  cfg.adapt_step = false;
  cfg.adapt_mass = false;
  cfg.step_size = 5.0;  // overshoots the cliff constantly
  cfg.num_leapfrog = 4;
  cfg.seed = 12;
  const auto sample = run_chains(target, cfg);
  CHECK(sample.divergences[0] > 0);
  // rejected transitions keep the chain inside the finite-density region
  CHECK(sample.draws.col(0).lpNorm<Eigen::Infinity>() <= 3.0);
}

TEST_CASE("run_chains rejects impossible init points") {
  HalfLineTarget target;  // log density finite only for theta > 40
  HmcConfig cfg;
  cfg.iterations = 10;
  cfg.warmup = 0;
  cfg.chains = 1;
  CHECK_THROWS_AS(run_chains(target, cfg), std::runtime_error);
}

TEST_CASE("run_chains honors per-chain init points") {
  StdNormalTarget target(2);
  HmcConfig cfg;
  cfg.chains = 2;
  cfg.iterations = 50;
  cfg.warmup = 0;
  cfg.adapt_step = false;
  cfg.adapt_mass = false;
  cfg.step_size = 1e-9;  // chains stay where they started
  cfg.seed = 8;
  const std::vector<Vector> inits = {(Vector(2) << 1.5, -0.5).finished(),
                                     (Vector(2) << -2.0, 0.25).finished()};
  const auto sample = run_chains(target, cfg, inits);
  CHECK(std::abs(sample.chain(0)(0, 0) - 1.5) < 1e-6);
  CHECK(std::abs(sample.chain(1)(0, 0) + 2.0) < 1e-6);
  CHECK_THROWS_AS(run_chains(target, cfg, {inits[0]}), std::invalid_argument);
}

TEST_CASE("gradient_check on a quadratic log density") {
  QuadraticTarget target((Vector(2) << 1.0, 3.0).finished());
  Rng rng(5);
  std::vector<Vector> points;
  for (int i = 0; i < 10; ++i) points.push_back(rng.normal_vector(2));
  CHECK(gradient_check(target, points) < 1e-7);
}

TEST_CASE("stationary distribution matches the target (chi-square smoke test)") {
  StdNormalTarget target(1);
  HmcConfig cfg;
  cfg.step_size = 0.45;
  cfg.num_leapfrog = 8;
  Rng rng(31415);
  Vector theta = Vector::Zero(1);

  const int bins = 30;
  std::vector<double> edges(bins - 1);
  for (int b = 1; b < bins; ++b)
    edges[b - 1] = oracles::normal_quantile(static_cast<double>(b) / bins);
  std::vector<int> counts(bins, 0);

  const int steps = 1000000;
  for (int i = 0; i < steps; ++i) {
    theta = hmc_step(theta, cfg, target, rng).theta;
    const auto it = std::upper_bound(edges.begin(), edges.end(), theta[0]);
    ++counts[static_cast<size_t>(it - edges.begin())];
  }
  const double expected = static_cast<double>(steps) / bins;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // chi-square(29) critical value at the 0.001 level
  CHECK(chi2 < 58.30);
}

TEST_CASE("split rhat separates mixed from unmixed chains") {
  Rng rng(77);
  Vector a(2000), b(2000);
  for (Index i = 0; i < 2000; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
  }
  CHECK(split_rhat({a, b}) < 1.01);
  CHECK(split_rhat({a, (b.array() + 5.0).matrix()}) > 1.5);
}

TEST_CASE("effective sample size: near-iid draws give ess near S") {
  Rng rng(78);
  Vector a(4000), b(4000);
  for (Index i = 0; i < 4000; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
  }
  const double ess = effective_sample_size({a, b});
  CHECK(ess > 5000.0);

  // AR(1) with strong positive correlation must shrink ess well below S
  Vector c(4000);
  c[0] = rng.normal();
  for (Index i = 1; i < 4000; ++i) c[i] = 0.9 * c[i - 1] + std::sqrt(1 - 0.81) * rng.normal();
  Vector d(4000);
  d[0] = rng.normal();
  for (Index i = 1; i < 4000; ++i) d[i] = 0.9 * d[i - 1] + std::sqrt(1 - 0.81) * rng.normal();
  CHECK(effective_sample_size({c, d}) < 2000.0);
}
