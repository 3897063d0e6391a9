#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

// Shared statistical utilities. All pass/fail thresholds used by the
// acceptance checks live here as named constants so they are auditable in one
// place.

namespace kmix {

// Agreement band for Monte Carlo estimates against exact values.
inline constexpr double kSigmaRule = 3.0;

// Kolmogorov-Smirnov critical coefficient at the 0.001 significance level:
// P(sqrt(N) D > x) ~ 2 exp(-2 x^2) = 1e-3 at x ~ 1.95.
inline constexpr double kKsCoeff = 1.95;

// Number of bootstrap resamples for rate confidence intervals.
inline constexpr int kBootstrapResamples = 1000;

// Relative tolerance on the fitted scalar mixing rate (torus vs free space).
inline constexpr double kMixingRateTolerance = 0.10;

// Relative tolerance on the forced late-time plateau against F_s / lambda.
inline constexpr double kPlateauTolerance = 0.15;

// Minimum relative size of the diffusive identity term for a kappa > 0 run to
// be considered a meaningful test of it.
inline constexpr double kDiffusiveFractionMin = 0.20;

inline double ks_threshold(std::size_t n) {
  return kKsCoeff / std::sqrt(static_cast<double>(n));
}

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
};

// Arithmetic mean and standard error (sample std / sqrt(N)); needs N >= 2.
MeanSE mean_se(std::span<const double> samples);

struct RateFit {
  double rate = 0.0;       // value ~ e^{-rate t}
  double intercept = 0.0;  // ln value at t = 0
  double se_rate = 0.0;
  double residual_rms = 0.0;
};

// Least squares of ln(value) on t. Returned rate is the decay rate (positive
// for decaying data). Values must be positive; needs >= 4 points. se_rate is
// the OLS slope standard error.
RateFit fit_exponential_rate(std::span<const double> times,
                             std::span<const double> values);

// Same fit on the across-replicate mean series, with se_rate from a bootstrap
// over replicates. replicates[r][i] is replicate r evaluated at times[i].
RateFit fit_exponential_rate_bootstrap(std::span<const double> times,
                                       const std::vector<std::vector<double>>& replicates,
                                       std::uint64_t bootstrap_seed);

// Sup-norm distance between the empirical CDF of samples and cdf. Needs >= 10
// samples; cdf must be monotone into [0, 1].
double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf);

// Normal(mu, sigma2) CDF.
double normal_cdf(double x, double mu, double sigma2);

}  // namespace kmix
