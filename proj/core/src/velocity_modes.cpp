#include "kmix/velocity_modes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kmix/rng.hpp"

namespace kmix {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kFitPoints = 8;
constexpr double kMiscalibrationResidual = 0.20;

// Half-lattice convention matching the r2c storage: keep k whose last nonzero
// trailing component is positive.
bool in_half_space(int d, const std::array<int, 3>& k) {
  if (d == 2) return k[1] > 0 || (k[1] == 0 && k[0] > 0);
  return k[2] > 0 || (k[2] == 0 && (k[1] > 0 || (k[1] == 0 && k[0] > 0)));
}

}  // namespace

Eigen::MatrixXd modeset_structure(const VelocityModeSet& mset, const Eigen::VectorXd& r) {
  const int d = mset.d;
  if (r.size() != d) throw std::invalid_argument("modeset_structure: bad separation");
  const double ku = 2.0 * kPi / mset.L;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (const auto& m : mset.modes) {
    double phase = 0.0;
    for (int i = 0; i < d; ++i) phase += ku * m.k[i] * r(i);
    const double w = m.amp * m.amp * (1.0 - std::cos(phase));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out(i, j) += w * m.pol[i] * m.pol[j];
  }
  return out;
}

StructureFit effective_structure_fit(const VelocityModeSet& mset, const TorusGrid& grid) {
  if (mset.modes.empty())
    throw std::invalid_argument("effective_structure_fit: empty mode set");
  const int d = mset.d;
  const double h = grid.L / grid.n;

  std::vector<double> d1_axis(d, 0.0);
  std::vector<double> tr_axis(d, 0.0);
  double residual_max = 0.0;
  for (int axis = 0; axis < d; ++axis) {
    double num_l = 0.0, num_t = 0.0, den = 0.0;
    std::vector<double> seps, longs;
    for (int m = 1; m <= kFitPoints; ++m) {
      Eigen::VectorXd r = Eigen::VectorXd::Zero(d);
      r(axis) = m * h;
      const Eigen::MatrixXd s = modeset_structure(mset, r);
      const double longitudinal = s(axis, axis);
      // Transverse component: average over the remaining diagonal entries.
      double transverse = 0.0;
      for (int j = 0; j < d; ++j)
        if (j != axis) transverse += s(j, j);
      transverse /= (d - 1);
      const double r2 = r.squaredNorm();
      num_l += longitudinal * r2;
      num_t += transverse * r2;
      den += r2 * r2;
      seps.push_back(r2);
      longs.push_back(longitudinal);
    }
    d1_axis[axis] = num_l / den;
    tr_axis[axis] = num_t / den;
    double rss = 0.0, ss = 0.0;
    for (int m = 0; m < kFitPoints; ++m) {
      const double fitv = d1_axis[axis] * seps[m];
      rss += (longs[m] - fitv) * (longs[m] - fitv);
      ss += fitv * fitv;
    }
    residual_max = std::max(residual_max, std::sqrt(rss / ss));
  }

  StructureFit fit;
  double mean_d1 = 0.0, mean_tr = 0.0;
  for (int axis = 0; axis < d; ++axis) {
    mean_d1 += d1_axis[axis];
    mean_tr += tr_axis[axis];
  }
  mean_d1 /= d;
  mean_tr /= d;
  fit.D1_eff = mean_d1;
  double iso = 0.0;
  for (int axis = 0; axis < d; ++axis)
    iso = std::max(iso, std::abs(d1_axis[axis] - mean_d1) / mean_d1);
  fit.isotropy_error = iso;
  fit.residual = residual_max;
  fit.transverse_ratio = mean_tr / mean_d1;
  fit.miscalibrated = residual_max > kMiscalibrationResidual;
  return fit;
}

VelocityModeSet synthesize_velocity_modes(const CovarianceSpec& spec, const TorusGrid& grid,
                                          int k_min, int k_max, std::uint64_t seed) {
  spec.require_smooth("synthesize_velocity_modes");
  if (spec.d != grid.d)
    throw std::invalid_argument("synthesize_velocity_modes: dimension mismatch");
  if (k_min < 1 || k_min >= k_max || k_max > grid.dealias_limit())
    throw std::invalid_argument(
        "synthesize_velocity_modes: need 1 <= k_min < k_max <= dealiasing boundary");

  const int d = grid.d;
  const double ku = grid.k_unit();
  VelocityModeSet mset;
  mset.d = d;
  mset.L = grid.L;

  const long lo2 = static_cast<long>(k_min) * k_min;
  const long hi2 = static_cast<long>(k_max) * k_max;
  const int kz_max = d == 3 ? k_max : 0;
  std::uint64_t mode_index = 0;
  for (int kz = 0; kz <= kz_max; ++kz) {
    for (int ky = -k_max; ky <= k_max; ++ky) {
      for (int kx = -k_max; kx <= k_max; ++kx) {
        const std::array<int, 3> k{kx, ky, kz};
        const long k2 = static_cast<long>(kx) * kx + static_cast<long>(ky) * ky +
                        static_cast<long>(kz) * kz;
        if (k2 < lo2 || k2 > hi2) continue;
        if (!in_half_space(d, k)) continue;
        const double kmag = ku * std::sqrt(static_cast<double>(k2));
        const double amp = std::pow(kmag, -(d + 2.0) / 2.0);
        if (d == 2) {
          VelocityMode m;
          m.k = k;
          const double inv = 1.0 / std::sqrt(static_cast<double>(k2));
          m.pol = {-ky * inv, kx * inv, 0.0};
          m.amp = amp;
          mset.modes.push_back(m);
        } else {
          // Orthonormal pair perpendicular to k, rotated by a seeded angle in
          // its plane (the covariance is invariant to this rotation).
          Eigen::Vector3d kv(kx, ky, kz);
          const Eigen::Vector3d khat = kv.normalized();
          int least = 0;
          for (int i = 1; i < 3; ++i)
            if (std::abs(khat(i)) < std::abs(khat(least))) least = i;
          Eigen::Vector3d axis = Eigen::Vector3d::Zero();
          axis(least) = 1.0;
          Eigen::Vector3d e1 = khat.cross(axis).normalized();
          Eigen::Vector3d e2 = khat.cross(e1);
          NormalStream angle_stream(stream_key(seed ^ kScalarTag, mode_index), 0);
          const double phi = 2.0 * kPi * angle_stream.uniform();
          const Eigen::Vector3d f1 = std::cos(phi) * e1 + std::sin(phi) * e2;
          const Eigen::Vector3d f2 = -std::sin(phi) * e1 + std::cos(phi) * e2;
          for (const auto& pol : {f1, f2}) {
            VelocityMode m;
            m.k = k;
            m.pol = {pol(0), pol(1), pol(2)};
            m.amp = amp;
            mset.modes.push_back(m);
          }
        }
        ++mode_index;
      }
    }
  }
  if (mset.modes.empty())
    throw std::invalid_argument("synthesize_velocity_modes: empty shell range");

  // Calibrate: one global rescale so the fitted quadratic coefficient matches
  // spec.D1 at grid-scale separations.
  const StructureFit raw = effective_structure_fit(mset, grid);
  const double gamma = std::sqrt(spec.D1 / raw.D1_eff);
  double sum_a2 = 0.0;
  for (auto& m : mset.modes) {
    m.amp *= gamma;
    sum_a2 += m.amp * m.amp;
  }
  const StructureFit fit = effective_structure_fit(mset, grid);
  mset.effective_D0 = sum_a2 / d;
  mset.effective_D1 = fit.D1_eff;
  mset.isotropy_error = fit.isotropy_error;
  mset.fit_residual = fit.residual;
  mset.transverse_ratio = fit.transverse_ratio;
  mset.miscalibrated = fit.miscalibrated;
  return mset;
}

}  // namespace kmix
