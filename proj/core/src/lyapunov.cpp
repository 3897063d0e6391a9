#include "kmix/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kmix/exact_laws.hpp"
#include "kmix/parallel.hpp"
#include "kmix/stats.hpp"
#include "kmix/version.hpp"

namespace kmix {

namespace {

constexpr double kStepVarianceTarget = 0.002;
constexpr int kOutputTimes = 32;

// Fresh unit vector: e1, or uniform on the sphere from the trajectory stream.
void initial_direction(int d, bool random, std::uint64_t seed, std::size_t traj,
                       double* v) {
  if (!random) {
    for (int j = 0; j < d; ++j) v[j] = j == 0 ? 1.0 : 0.0;
    return;
  }
  NormalStream gauss(stream_key(seed ^ kDirectionTag, traj), 0);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (int j = 0; j < d; ++j) {
      v[j] = gauss.next();
      norm2 += v[j] * v[j];
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  for (int j = 0; j < d; ++j) v[j] *= inv;
}

struct TangentKernel {
  const GradientNoiseSampler& sampler;
  int d;
  double sqrt_dt;

  // Returns the log-norm increment and renormalizes v in place.
  // xi must hold d*d doubles, w must hold d doubles.
  double advance(double* v, NormalStream& gauss, double* xi, double* w) const {
    sampler.sample(gauss, xi);
    double norm2 = 0.0;
    for (int i = 0; i < d; ++i) {
      double acc = 0.0;
      for (int j = 0; j < d; ++j) acc += xi[i * d + j] * v[j];
      w[i] = v[i] + sqrt_dt * acc;
      norm2 += w[i] * w[i];
    }
    if (norm2 == 0.0)
      throw std::runtime_error("step_tangent: tangent vector collapsed to zero");
    const double norm = std::sqrt(norm2);
    const double inv = 1.0 / norm;
    for (int i = 0; i < d; ++i) v[i] = w[i] * inv;
    return std::log(norm);
  }
};

}  // namespace

GradientNoiseSampler::GradientNoiseSampler(const CovarianceSpec& spec) : d_(spec.d) {
  const Eigen::MatrixXd cov = gradient_covariance_tensor(spec).as_matrix();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("GradientNoiseSampler: eigendecomposition failed");
  const Eigen::VectorXd& vals = eig.eigenvalues();
  const double scale = vals.cwiseAbs().maxCoeff();
  if (vals.minCoeff() < -1e-10 * scale)
    throw std::runtime_error(
        "GradientNoiseSampler: gradient covariance is not PSD (covariance bug)");
  Eigen::VectorXd roots = vals;
  for (Eigen::Index i = 0; i < roots.size(); ++i)
    roots(i) = roots(i) > 1e-12 * scale ? std::sqrt(roots(i)) : 0.0;
  factor_ = eig.eigenvectors() * roots.asDiagonal();
}

void GradientNoiseSampler::sample(NormalStream& gauss, double* xi) const {
  const int n = d_ * d_;
  double stack[16];
  std::vector<double> heap;
  double* eta = stack;
  if (n > 16) {
    heap.resize(static_cast<std::size_t>(n));
    eta = heap.data();
  }
  gauss.fill(eta, n);
  for (int r = 0; r < n; ++r) {
    double acc = 0.0;
    for (int c = 0; c < n; ++c) acc += factor_(r, c) * eta[c];
    xi[r] = acc;
  }
}

TangentEnsemble make_tangent_ensemble(const CovarianceSpec& spec, std::size_t n,
                                      double dt, std::uint64_t seed,
                                      bool random_directions) {
  spec.require_smooth("tangent ensemble");
  if (!(dt > 0.0)) throw std::invalid_argument("tangent ensemble: dt must be > 0");
  TangentEnsemble e;
  e.d = spec.d;
  e.dt = dt;
  e.seed = seed;
  e.directions.resize(n * static_cast<std::size_t>(spec.d));
  e.log_stretch.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    initial_direction(spec.d, random_directions, seed, i, &e.directions[i * spec.d]);
  return e;
}

void step_tangent(TangentEnsemble& e, const CovarianceSpec& spec,
                  const GradientNoiseSampler& sampler) {
  spec.require_smooth("step_tangent");
  if (sampler.dim() != e.d || spec.d != e.d)
    throw std::invalid_argument("step_tangent: dimension mismatch");
  const TangentKernel kernel{sampler, e.d, std::sqrt(e.dt)};
  const std::size_t n = e.size();
  std::vector<double> xi(static_cast<std::size_t>(e.d) * e.d);
  std::vector<double> w(static_cast<std::size_t>(e.d));
  for (std::size_t i = 0; i < n; ++i) {
    NormalStream gauss(stream_key(e.seed ^ kTangentTag, i),
                       static_cast<std::uint64_t>(e.step));
    e.log_stretch[i] += kernel.advance(&e.directions[i * e.d], gauss, xi.data(), w.data());
  }
  ++e.step;
  e.t = static_cast<double>(e.step) * e.dt;
}

double default_tangent_dt(const CovarianceSpec& spec) {
  spec.require_smooth("default_tangent_dt");
  return kStepVarianceTarget / (2.0 * spec.D1 * (spec.d + 2.0));
}

ExperimentReport estimate_lyapunov(const CovarianceSpec& spec, const LyapunovParams& p) {
  spec.require_smooth("estimate_lyapunov");
  if (p.trajectories < 2)
    throw std::invalid_argument("estimate_lyapunov: need at least 2 trajectories");
  if (!(p.horizon * spec.D1 >= 5.0))
    throw std::invalid_argument(
        "estimate_lyapunov: T * D1 must be >= 5 for the time average to concentrate");
  const double dt = p.dt > 0.0 ? p.dt : default_tangent_dt(spec);
  const int d = spec.d;
  const std::size_t n = p.trajectories;
  const long n_steps = std::lround(std::ceil(p.horizon / dt - 1e-12));

  std::vector<long> out_steps;
  for (int k = 1; k <= kOutputTimes; ++k)
    out_steps.push_back(n_steps * k / kOutputTimes);
  out_steps.erase(std::unique(out_steps.begin(), out_steps.end()), out_steps.end());
  const std::size_t n_out = out_steps.size();

  const GradientNoiseSampler sampler(spec);
  std::vector<double> stretch(n_out * n, 0.0);  // [k * N + i]

  const TangentKernel kernel{sampler, d, std::sqrt(dt)};
  parallel_for(n, p.workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> v(static_cast<std::size_t>(d));
    std::vector<double> xi(static_cast<std::size_t>(d) * d);
    std::vector<double> w(static_cast<std::size_t>(d));
    for (std::size_t i = begin; i < end; ++i) {
      initial_direction(d, p.random_directions, p.seed, i, v.data());
      double ls = 0.0;
      std::size_t out_idx = 0;
      for (long step = 0; step < n_steps; ++step) {
        NormalStream gauss(stream_key(p.seed ^ kTangentTag, i),
                           static_cast<std::uint64_t>(step));
        ls += kernel.advance(v.data(), gauss, xi.data(), w.data());
        if (out_idx < n_out && out_steps[out_idx] == step + 1) {
          stretch[out_idx * n + i] = ls;
          ++out_idx;
        }
      }
    }
  });

  ExperimentReport report;
  report.module = "lyapunov_mc";
  report.version = kVersion;
  report.seed = p.seed;
  report.bootstrap_seed = stream_key(p.seed, kBootstrapTag);
  report.dt = dt;
  report.ensemble_size = n;

  const double lambda1 = d * spec.D1;
  bool martingale_ok = true;
  double martingale_worst = 0.0;
  std::vector<double> slice(n);
  for (std::size_t k = 0; k < n_out; ++k) {
    const double t = static_cast<double>(out_steps[k]) * dt;
    for (std::size_t i = 0; i < n; ++i) slice[i] = stretch[k * n + i];
    const MeanSE ms = mean_se(slice);
    const double var = ms.se * ms.se * static_cast<double>(n);
    const double var_se = var * std::sqrt(2.0 / static_cast<double>(n - 1));
    report.rows.push_back({t, "log_stretch_mean", ms.mean, ms.se, lambda1 * t,
                           "exact_laws.separation_law"});
    report.rows.push_back({t, "log_stretch_var", var, var_se, 2.0 * spec.D1 * t,
                           "exact_laws.separation_law"});
    const double dev = std::abs(ms.mean - lambda1 * t);
    if (dev > kSigmaRule * ms.se) martingale_ok = false;
    if (ms.se > 0.0) martingale_worst = std::max(martingale_worst, dev / ms.se);
  }
  report.verdicts.push_back({"lyapunov_martingale_mean_zero", martingale_ok,
                             "max |mean - d D1 t|/SE = " + format_double(martingale_worst)});

  // Top exponent from the final slice.
  {
    const std::size_t k = n_out - 1;
    const double T_end = static_cast<double>(out_steps[k]) * dt;
    for (std::size_t i = 0; i < n; ++i) slice[i] = stretch[k * n + i] / T_end;
    const MeanSE ms = mean_se(slice);
    report.rates.push_back({"lyapunov_top_exponent", ms.mean, ms.se, lambda1,
                            "exact_laws.separation_law"});
    report.verdicts.push_back(
        {"lyapunov_top_exponent", std::abs(ms.mean - lambda1) <= kSigmaRule * ms.se,
         "estimate " + format_double(ms.mean) + " vs " + format_double(lambda1) +
             " (se " + format_double(ms.se) + ")"});

    for (std::size_t i = 0; i < n; ++i) slice[i] = stretch[k * n + i];
    const MeanSE full = mean_se(slice);
    const double var = full.se * full.se * static_cast<double>(n);
    const double var_se = var * std::sqrt(2.0 / static_cast<double>(n - 1));
    const double target = 2.0 * spec.D1;
    report.rates.push_back({"martingale_variance_rate", var / T_end, var_se / T_end,
                            target, "exact_laws.separation_law"});
    report.verdicts.push_back(
        {"lyapunov_martingale_variance",
         std::abs(var / T_end - target) <= kSigmaRule * var_se / T_end,
         "Var/t " + format_double(var / T_end) + " vs " + format_double(target) +
             " (se " + format_double(var_se / T_end) + ")"});
  }

  report.extra["n_steps"] = n_steps;
  report.extra["initial_direction"] = p.random_directions ? "random" : "e1";
  return report;
}

}  // namespace kmix
