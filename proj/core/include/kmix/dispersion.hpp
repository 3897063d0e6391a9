#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "kmix/covariance.hpp"
#include "kmix/exact_laws.hpp"
#include "kmix/report.hpp"

// Monte Carlo for the two-particle separation process dR = Sigma(R) dB with
// Sigma Sigma^T = 2 (D(0) - D(R)). The generator has no first-order term, so
// the Euler-Maruyama update carries no drift.

namespace kmix {

struct SeparationEnsemble {
  int d = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  long step = 0;
  double t = 0.0;  // always step * dt
  Eigen::VectorXd r0;
  std::vector<double> separations;     // N x d, row-major
  std::vector<std::uint8_t> excluded;  // sticky under/overflow flags
  std::uint64_t excluded_count = 0;

  std::size_t size() const { return excluded.size(); }
};

SeparationEnsemble make_separation_ensemble(const CovarianceSpec& spec,
                                            const Eigen::VectorXd& r0, std::size_t n,
                                            double dt, std::uint64_t seed);

// One Euler-Maruyama step for every live trajectory:
//   R <- R + sqrt(dt) Sigma(R) xi,  xi ~ N(0, I_d).
// Trajectories whose |R| leaves [1e-300 |r0|, finite) are flagged, counted,
// and frozen.
void step_separation(SeparationEnsemble& ensemble, const CovarianceSpec& spec);

struct DispersionParams {
  Eigen::VectorXd r0;
  std::size_t trajectories = 0;      // N >= 100
  double horizon = 0.0;              // T
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> s_values;      // each in [0, d/2)
  std::vector<double> sample_times;  // KS check times (snapped onto the grid)
  int workers = 1;
};

// Full dispersion experiment: inverse-moment estimates against the exact
// decay laws at 32 geometric output times (plus t = 0), log-separation
// drift/variance, and KS tests of log|R_t| against the lognormal law at the
// requested sample times. Deterministic for fixed (seed, N, dt, T) at any
// worker count.
ExperimentReport run_dispersion(const CovarianceSpec& spec, const DispersionParams& params);

// N i.i.d. samples of rho_t = exp(Normal(mu, sigma2)) from the exact law.
std::vector<double> radial_exact_sampler(const CovarianceSpec& spec, double rho0,
                                         double t, std::size_t n, std::uint64_t seed);

struct KsResult {
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

// Two-sided KS test of log(samples) against Normal(law.mu, law.sigma2) at the
// 0.001 level. A degenerate law (sigma2 = 0) compares exact equality instead.
KsResult distribution_test(std::span<const double> samples, const LognormalLaw& law);

}  // namespace kmix
