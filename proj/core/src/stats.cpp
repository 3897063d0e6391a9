#include "kmix/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kmix/rng.hpp"

namespace kmix {

MeanSE mean_se(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("mean_se: need at least 2 samples");
  double sum = 0.0;
  for (double x : samples) sum += x;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double x : samples) {
    const double dxm = x - mean;
    ss += dxm * dxm;
  }
  const double var = ss / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

RateFit fit_exponential_rate(std::span<const double> times,
                             std::span<const double> values) {
  const std::size_t n = times.size();
  if (n != values.size())
    throw std::invalid_argument("fit_exponential_rate: length mismatch");
  if (n < 4) throw std::invalid_argument("fit_exponential_rate: need at least 4 points");

  double st = 0.0, sy = 0.0;
  std::vector<double> logs(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(values[i] > 0.0))
      throw std::invalid_argument("fit_exponential_rate: values must be positive");
    logs[i] = std::log(values[i]);
    st += times[i];
    sy += logs[i];
  }
  const double tbar = st / static_cast<double>(n);
  const double ybar = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (times[i] - tbar) * (times[i] - tbar);
    sxy += (times[i] - tbar) * (logs[i] - ybar);
  }
  if (sxx == 0.0)
    throw std::invalid_argument("fit_exponential_rate: degenerate time grid");
  const double slope = sxy / sxx;
  const double intercept = ybar - slope * tbar;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double resid = logs[i] - (intercept + slope * times[i]);
    rss += resid * resid;
  }
  const double s2 = n > 2 ? rss / static_cast<double>(n - 2) : 0.0;
  RateFit fit;
  fit.rate = -slope;
  fit.intercept = intercept;
  fit.se_rate = std::sqrt(s2 / sxx);
  fit.residual_rms = std::sqrt(rss / static_cast<double>(n));
  return fit;
}

RateFit fit_exponential_rate_bootstrap(std::span<const double> times,
                                       const std::vector<std::vector<double>>& replicates,
                                       std::uint64_t bootstrap_seed) {
  const std::size_t m = replicates.size();
  if (m < 2)
    throw std::invalid_argument("fit_exponential_rate_bootstrap: need >= 2 replicates");
  const std::size_t n = times.size();
  for (const auto& rep : replicates)
    if (rep.size() != n)
      throw std::invalid_argument("fit_exponential_rate_bootstrap: ragged replicates");

  std::vector<double> mean(n, 0.0);
  for (const auto& rep : replicates)
    for (std::size_t i = 0; i < n; ++i) mean[i] += rep[i];
  for (double& v : mean) v /= static_cast<double>(m);
  RateFit fit = fit_exponential_rate(times, mean);

  std::vector<double> boot_rates;
  boot_rates.reserve(kBootstrapResamples);
  std::vector<double> resampled(n);
  for (int b = 0; b < kBootstrapResamples; ++b) {
    NormalStream pick(stream_key(bootstrap_seed, static_cast<std::uint64_t>(b)), 0);
    std::fill(resampled.begin(), resampled.end(), 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      const auto idx = static_cast<std::size_t>(pick.uniform() * static_cast<double>(m));
      const auto& rep = replicates[idx < m ? idx : m - 1];
      for (std::size_t i = 0; i < n; ++i) resampled[i] += rep[i];
    }
    bool positive = true;
    for (std::size_t i = 0; i < n; ++i) {
      resampled[i] /= static_cast<double>(m);
      positive = positive && resampled[i] > 0.0;
    }
    if (!positive) continue;  // pathological resample; skip rather than abort
    boot_rates.push_back(fit_exponential_rate(times, resampled).rate);
  }
  if (boot_rates.size() >= 2) {
    const MeanSE ms = mean_se(boot_rates);
    fit.se_rate = ms.se * std::sqrt(static_cast<double>(boot_rates.size()));
  }
  return fit;
}

double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf) {
  const std::size_t n = samples.size();
  if (n < 10) throw std::invalid_argument("ks_statistic: need at least 10 samples");
  std::sort(samples.begin(), samples.end());
  double dist = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(samples[i]);
    const double lo = static_cast<double>(i) / static_cast<double>(n);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
    dist = std::max({dist, std::abs(f - lo), std::abs(hi - f)});
  }
  return dist;
}

double normal_cdf(double x, double mu, double sigma2) {
  return 0.5 * std::erfc(-(x - mu) / std::sqrt(2.0 * sigma2));
}

}  // namespace kmix
