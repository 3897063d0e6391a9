#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

// Closed-form tensor algebra for the self-similar isotropic velocity
// covariance D(0) - D(r) = D1 [ I + (zeta/(d-1)) (I - rhat rhat^T) ] |r|^zeta.
// All quantities here are exact algebra; nothing is sampled.

namespace kmix {

struct CovarianceSpec {
  int d = 0;          // spatial dimension, >= 2
  double D1 = 0.0;    // small-scale shear amplitude [1/time]
  double D0 = 0.0;    // one-point variance amplitude [length^2/time]
  double zeta = 2.0;  // self-similarity exponent, in (0, 2]

  void validate() const;
  // The gradient-level formulas only exist for zeta == 2; reject otherwise.
  void require_smooth(const char* op) const;
};

// Coincident-point gradient covariance E[d_j sigma_k d_l sigma_m], stored as
// d^4 entries indexed (k, j, m, l).
struct Rank4Tensor {
  int d = 0;
  std::vector<double> entries;

  double operator()(int k, int j, int m, int l) const {
    return entries[static_cast<std::size_t>(((k * d + j) * d + m) * d + l)];
  }
  double& at(int k, int j, int m, int l) {
    return entries[static_cast<std::size_t>(((k * d + j) * d + m) * d + l)];
  }
  // View as a symmetric d^2 x d^2 matrix over row (k,j), column (m,l).
  Eigen::MatrixXd as_matrix() const;
};

// D(0) - D(r). r = 0 gives the zero matrix.
Eigen::MatrixXd structure_tensor(const CovarianceSpec& spec, const Eigen::VectorXd& r);

// The rank-4 coincident-point gradient covariance; requires zeta == 2.
Rank4Tensor gradient_covariance_tensor(const CovarianceSpec& spec);

// C_jk = sum_i d_j d_k' D^{ii}|_0 = 2 D1 (d+2) I; requires zeta == 2.
Eigen::MatrixXd strain_trace_matrix(const CovarianceSpec& spec);

// Exact square root of the separation diffusion matrix:
//   Sigma(r) = sqrt(2 D1) |r| [ rhat rhat^T + sqrt((d+1)/(d-1)) (I - rhat rhat^T) ]
// so that Sigma Sigma^T = 2 (D(0) - D(r)). r = 0 is rejected (absorbing point).
Eigen::MatrixXd diffusion_sqrt(const CovarianceSpec& spec, const Eigen::VectorXd& r);

// The spectral-cutoff example constants: given the raw amplitude Dbar0 and
// infrared cutoff m, returns (D0, D1) with
//   D0 = Dbar0/m^2 * (d-1) / (d (4 pi)^{d/2} Gamma((d+2)/2))
//   D1 = Dbar0     * (d-1) / ((d+2) (4 pi)^{d/2} Gamma((d+2)/2))
std::pair<double, double> example_spectral_constants(int d, double m, double Dbar0);

namespace detail {

// y = Sigma(r) x without forming the matrix. Assumes |r| > 0 and zeta == 2.
inline void apply_diffusion_sqrt(double D1, int d, const double* r, const double* x,
                                 double* y) noexcept {
  double rho2 = 0.0;
  double dot = 0.0;
  for (int i = 0; i < d; ++i) {
    rho2 += r[i] * r[i];
    dot += r[i] * x[i];
  }
  const double rho = std::sqrt(rho2);
  const double cperp = std::sqrt((d + 1.0) / (d - 1.0));
  const double scale = std::sqrt(2.0 * D1) * rho;
  const double proj = dot / rho2;  // (x . rhat) / rho
  for (int i = 0; i < d; ++i) {
    y[i] = scale * (cperp * x[i] + (1.0 - cperp) * proj * r[i]);
  }
}

}  // namespace detail

}  // namespace kmix
