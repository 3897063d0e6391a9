#include "kmix/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "kmix/parallel.hpp"
#include "kmix/rng.hpp"
#include "kmix/stats.hpp"
#include "kmix/version.hpp"

namespace kmix {

namespace {

constexpr double kUnderflowFactor = 1e-300;
constexpr double kMaxExcludedFraction = 0.01;
constexpr int kOutputTimes = 32;

struct StepKernel {
  double D1;
  int d;
  double sqrt_dt;
  double floor_rho;  // 1e-300 * |r0|

  // Returns false when the trajectory leaves the representable range.
  // xi and sig must each hold d doubles.
  bool advance(double* r, NormalStream& gauss, double* xi, double* sig) const noexcept {
    gauss.fill(xi, d);
    detail::apply_diffusion_sqrt(D1, d, r, xi, sig);
    double rho2 = 0.0;
    for (int i = 0; i < d; ++i) {
      r[i] += sqrt_dt * sig[i];
      rho2 += r[i] * r[i];
    }
    const double rho = std::sqrt(rho2);
    return std::isfinite(rho) && rho >= floor_rho;
  }
};

std::vector<long> output_steps(long n_steps, double dt,
                               const std::vector<double>& extra_times) {
  std::set<long> steps{0, n_steps};
  // Geometric grid of 32 times in (0, T], snapped onto the step grid.
  const double T = static_cast<double>(n_steps) * dt;
  const double t_min = std::max(dt, T / 1000.0);
  const double ratio = std::pow(t_min / T, 1.0 / (kOutputTimes - 1));
  for (int i = 0; i < kOutputTimes; ++i) {
    const double t = T * std::pow(ratio, i);
    const long s = std::clamp(std::lround(t / dt), 1L, n_steps);
    steps.insert(s);
  }
  for (double t : extra_times) {
    const long s = std::clamp(std::lround(t / dt), 0L, n_steps);
    steps.insert(s);
  }
  return {steps.begin(), steps.end()};
}

double quantile(std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

}  // namespace

SeparationEnsemble make_separation_ensemble(const CovarianceSpec& spec,
                                            const Eigen::VectorXd& r0, std::size_t n,
                                            double dt, std::uint64_t seed) {
  spec.require_smooth("separation ensemble");
  if (r0.size() != spec.d)
    throw std::invalid_argument("separation ensemble: r0 has wrong dimension");
  if (!(r0.norm() > 0.0))
    throw std::invalid_argument("separation ensemble: |r0| must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("separation ensemble: dt must be > 0");
  SeparationEnsemble e;
  e.d = spec.d;
  e.dt = dt;
  e.seed = seed;
  e.r0 = r0;
  e.separations.resize(n * static_cast<std::size_t>(spec.d));
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < spec.d; ++j)
      e.separations[i * spec.d + j] = r0(j);
  e.excluded.assign(n, 0);
  return e;
}

void step_separation(SeparationEnsemble& e, const CovarianceSpec& spec) {
  spec.require_smooth("step_separation");
  if (spec.d != e.d) throw std::invalid_argument("step_separation: dimension mismatch");
  const StepKernel kernel{spec.D1, e.d, std::sqrt(e.dt), kUnderflowFactor * e.r0.norm()};
  const std::size_t n = e.size();
  std::vector<double> xi(static_cast<std::size_t>(e.d));
  std::vector<double> sig(static_cast<std::size_t>(e.d));
  for (std::size_t i = 0; i < n; ++i) {
    if (e.excluded[i]) continue;
    NormalStream gauss(stream_key(e.seed ^ kDispersionTag, i),
                       static_cast<std::uint64_t>(e.step));
    if (!kernel.advance(&e.separations[i * e.d], gauss, xi.data(), sig.data())) {
      e.excluded[i] = 1;
      ++e.excluded_count;
    }
  }
  ++e.step;
  e.t = static_cast<double>(e.step) * e.dt;
}

std::vector<double> radial_exact_sampler(const CovarianceSpec& spec, double rho0,
                                         double t, std::size_t n, std::uint64_t seed) {
  const LognormalLaw law = separation_law(spec.d, spec.D1, rho0, t);
  std::vector<double> out(n);
  if (law.sigma2 == 0.0) {
    std::fill(out.begin(), out.end(), rho0);
    return out;
  }
  const double sigma = std::sqrt(law.sigma2);
  for (std::size_t i = 0; i < n; ++i) {
    NormalStream gauss(stream_key(seed ^ kSamplerTag, i), 0);
    out[i] = std::exp(law.mu + sigma * gauss.next());
  }
  return out;
}

KsResult distribution_test(std::span<const double> samples, const LognormalLaw& law) {
  if (samples.size() < 1000)
    throw std::invalid_argument("distribution_test: need at least 1000 samples");
  KsResult res;
  res.threshold = ks_threshold(samples.size());
  if (law.sigma2 == 0.0) {
    // Degenerate law: every sample must equal exp(mu) exactly.
    const double v = std::exp(law.mu);
    bool equal = true;
    for (double x : samples) equal = equal && x == v;
    res.statistic = equal ? 0.0 : 1.0;
    res.pass = equal;
    return res;
  }
  std::vector<double> logs(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) logs[i] = std::log(samples[i]);
  res.statistic = ks_statistic(
      std::move(logs), [&](double x) { return normal_cdf(x, law.mu, law.sigma2); });
  res.pass = res.statistic < res.threshold;
  return res;
}

ExperimentReport run_dispersion(const CovarianceSpec& spec, const DispersionParams& p) {
  spec.require_smooth("run_dispersion");
  if (p.trajectories < 100)
    throw std::invalid_argument("run_dispersion: N must be >= 100");
  if (!(p.horizon > 0.0)) throw std::invalid_argument("run_dispersion: T must be > 0");
  if (!(p.dt > 0.0) || p.dt > p.horizon)
    throw std::invalid_argument("run_dispersion: need 0 < dt <= T");
  if (p.r0.size() != spec.d)
    throw std::invalid_argument("run_dispersion: r0 has wrong dimension");
  const double rho0 = p.r0.norm();
  if (!(rho0 > 0.0)) throw std::invalid_argument("run_dispersion: |r0| must be > 0");
  for (double s : p.s_values)
    if (!(s >= 0.0) || !(s < spec.d / 2.0))
      throw std::invalid_argument("run_dispersion: s must lie in [0, d/2)");

  const std::size_t n = p.trajectories;
  const int d = spec.d;
  const long n_steps = std::lround(std::ceil(p.horizon / p.dt - 1e-12));
  const auto out_steps = output_steps(n_steps, p.dt, p.sample_times);
  const std::size_t n_out = out_steps.size();

  // rho[k * N + i]: |R| of trajectory i at output index k (NaN once excluded).
  std::vector<double> rho(n_out * n, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::uint8_t> excluded(n, 0);

  const StepKernel kernel{spec.D1, d, std::sqrt(p.dt), kUnderflowFactor * rho0};
  parallel_for(n, p.workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> r(static_cast<std::size_t>(d));
    std::vector<double> xi(static_cast<std::size_t>(d));
    std::vector<double> sig(static_cast<std::size_t>(d));
    for (std::size_t i = begin; i < end; ++i) {
      for (int j = 0; j < d; ++j) r[static_cast<std::size_t>(j)] = p.r0(j);
      std::size_t out_idx = 0;
      for (long step = 0; step <= n_steps; ++step) {
        if (out_idx < n_out && out_steps[out_idx] == step) {
          double rr = 0.0;
          for (int j = 0; j < d; ++j) rr += r[j] * r[j];
          rho[out_idx * n + i] = std::sqrt(rr);
          ++out_idx;
        }
        if (step == n_steps) break;
        NormalStream gauss(stream_key(p.seed ^ kDispersionTag, i),
                           static_cast<std::uint64_t>(step));
        if (!kernel.advance(r.data(), gauss, xi.data(), sig.data())) {
          excluded[i] = 1;
          break;
        }
      }
    }
  });

  std::uint64_t n_excluded = 0;
  for (std::size_t i = 0; i < n; ++i) n_excluded += excluded[i];
  if (static_cast<double>(n_excluded) > kMaxExcludedFraction * static_cast<double>(n))
    throw std::runtime_error("run_dispersion: excluded-trajectory fraction exceeds 1%");

  ExperimentReport report;
  report.module = "dispersion_mc";
  report.version = kVersion;
  report.seed = p.seed;
  report.bootstrap_seed = stream_key(p.seed, kBootstrapTag);
  report.dt = p.dt;
  report.ensemble_size = n;
  report.excluded = n_excluded;

  json tails = json::array();
  std::vector<double> live;
  live.reserve(n);
  std::vector<double> times(n_out);
  // Estimate series per s value, for the rate fits below.
  std::vector<std::vector<double>> moment_series(p.s_values.size(),
                                                 std::vector<double>(n_out));
  std::vector<bool> decay_ok(p.s_values.size(), true);
  std::vector<double> decay_worst(p.s_values.size(), 0.0);

  for (std::size_t k = 0; k < n_out; ++k) {
    const double t = static_cast<double>(out_steps[k]) * p.dt;
    times[k] = t;
    live.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const double v = rho[k * n + i];
      if (!std::isnan(v)) live.push_back(v);
    }
    if (live.size() < 2) throw std::runtime_error("run_dispersion: ensemble died out");

    const auto [mn, mx] = std::minmax_element(live.begin(), live.end());
    const bool degenerate = *mn == *mx;

    for (std::size_t si = 0; si < p.s_values.size(); ++si) {
      const double s = p.s_values[si];
      const double expo = 2.0 * s - d;
      double est, se;
      if (degenerate) {
        est = std::pow(*mn, expo);
        se = 0.0;
      } else {
        std::vector<double> vals(live.size());
        for (std::size_t i = 0; i < live.size(); ++i) vals[i] = std::pow(live[i], expo);
        const MeanSE ms = mean_se(vals);
        est = ms.mean;
        se = ms.se;
      }
      moment_series[si][k] = est;
      const double exact = inverse_moment(d, s, spec.D1, rho0, t);
      const double dev = std::abs(est - exact);
      if (dev > kSigmaRule * se) decay_ok[si] = false;
      if (se > 0.0) decay_worst[si] = std::max(decay_worst[si], dev / se);
      ReportRow row;
      row.time = t;
      row.observable = "inverse_moment_s=" + format_double(s);
      row.estimate = est;
      row.se = se;
      row.exact = exact;
      row.exact_source = "exact_laws.inverse_moment";
      report.rows.push_back(std::move(row));
    }

    // Log-separation drift and spread against the lognormal law.
    const LognormalLaw law = separation_law(d, spec.D1, rho0, t);
    double log_mean, log_se, log_var, var_se;
    if (degenerate) {
      log_mean = std::log(*mn);
      log_se = 0.0;
      log_var = 0.0;
      var_se = 0.0;
    } else {
      std::vector<double> logs(live.size());
      for (std::size_t i = 0; i < live.size(); ++i) logs[i] = std::log(live[i]);
      const MeanSE ms = mean_se(logs);
      log_mean = ms.mean;
      log_se = ms.se;
      log_var = ms.se * ms.se * static_cast<double>(logs.size());
      var_se = log_var * std::sqrt(2.0 / static_cast<double>(logs.size() - 1));
    }
    report.rows.push_back({t, "log_separation_mean", log_mean, log_se, law.mu,
                           "exact_laws.separation_law"});
    report.rows.push_back({t, "log_separation_var", log_var, var_se, law.sigma2,
                           "exact_laws.separation_law"});

    std::sort(live.begin(), live.end());
    tails.push_back({{"time", t},
                     {"q_0.001", quantile(live, 0.001)},
                     {"q_0.999", quantile(live, 0.999)},
                     {"live", live.size()}});
  }
  report.extra["tail_quantiles"] = std::move(tails);

  // Decay verdicts: every output time within |estimate - exact| <= 3 SE.
  for (std::size_t si = 0; si < p.s_values.size(); ++si) {
    const double s = p.s_values[si];
    const char* name = s == 0.0 ? "dispersion_conservation" : "dispersion_decay";
    report.verdicts.push_back({std::string(name) + "_s=" + format_double(s),
                               decay_ok[si],
                               "max |deviation|/SE = " + format_double(decay_worst[si])});
  }

  // Rate fits over t in [0, 2/lambda] for s > 0.
  for (std::size_t si = 0; si < p.s_values.size(); ++si) {
    const double s = p.s_values[si];
    if (s == 0.0) continue;
    const double lambda = lambda_ds(d, s, spec.D1);
    std::vector<double> ft, fv;
    for (std::size_t k = 0; k < n_out; ++k) {
      if (times[k] <= 2.0 / lambda && moment_series[si][k] > 0.0) {
        ft.push_back(times[k]);
        fv.push_back(moment_series[si][k]);
      }
    }
    if (ft.size() < 4) continue;
    const RateFit fit = fit_exponential_rate(ft, fv);
    report.rates.push_back({"inverse_moment_rate_s=" + format_double(s), fit.rate,
                            fit.se_rate, lambda, "exact_laws.lambda_ds"});
    report.verdicts.push_back(
        {"dispersion_rate_s=" + format_double(s),
         std::abs(fit.rate - lambda) <= kSigmaRule * fit.se_rate,
         "fit " + format_double(fit.rate) + " vs " + format_double(lambda) +
             " (se " + format_double(fit.se_rate) + ")"});
  }

  // Endpoint estimator of the log-separation drift (= top Lyapunov exponent).
  {
    live.clear();
    const std::size_t k = n_out - 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = rho[k * n + i];
      if (!std::isnan(v)) live.push_back(std::log(v / rho0));
    }
    const MeanSE ms = mean_se(live);
    const double T_end = times[k];
    report.rates.push_back({"log_separation_drift", ms.mean / T_end, ms.se / T_end,
                            d * spec.D1, "exact_laws.separation_law"});
  }

  // KS distribution checks at the requested sample times.
  for (double t_req : p.sample_times) {
    const long s_idx = std::clamp(std::lround(t_req / p.dt), 0L, n_steps);
    const auto it = std::find(out_steps.begin(), out_steps.end(), s_idx);
    const std::size_t k = static_cast<std::size_t>(it - out_steps.begin());
    live.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const double v = rho[k * n + i];
      if (!std::isnan(v)) live.push_back(v);
    }
    const double t = times[k];
    const KsResult ks = distribution_test(live, separation_law(d, spec.D1, rho0, t));
    report.verdicts.push_back(
        {"dispersion_lognormal_ks_t=" + format_double(t), ks.pass,
         "KS " + format_double(ks.statistic) + " vs " + format_double(ks.threshold)});
  }

  return report;
}

}  // namespace kmix
