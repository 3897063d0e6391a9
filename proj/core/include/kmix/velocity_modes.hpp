#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "kmix/covariance.hpp"
#include "kmix/torus_grid.hpp"

// Divergence-free Gaussian velocity on the torus, represented by a finite set
// of Fourier modes. Per time step, each (mode, polarization) carries two
// independent standard Gaussians (cosine and sine components), giving the
// exact mode-sum covariance D(r) = sum a^2 p p^T cos(k . r).

namespace kmix {

struct VelocityMode {
  std::array<int, 3> k{};       // integer wavevector (first d entries used)
  std::array<double, 3> pol{};  // unit polarization, perpendicular to k
  double amp = 0.0;             // per-mode amplitude a
};

struct VelocityModeSet {
  int d = 0;
  double L = 0.0;
  std::vector<VelocityMode> modes;
  double effective_D0 = 0.0;   // tr D(0) / d = sum a^2 / d
  double effective_D1 = 0.0;   // fitted quadratic structure coefficient
  double isotropy_error = 0.0; // axis-to-axis spread of the fit
  double fit_residual = 0.0;   // relative rms residual of the quadratic fit
  double transverse_ratio = 0.0;  // fitted transverse/longitudinal, target (d+1)/(d-1)
  bool miscalibrated = false;  // fit residual above 20%
};

struct StructureFit {
  double D1_eff = 0.0;
  double isotropy_error = 0.0;
  double residual = 0.0;
  double transverse_ratio = 0.0;
  bool miscalibrated = false;
};

// Exact D(0) - D(r) of the mode sum.
Eigen::MatrixXd modeset_structure(const VelocityModeSet& modes, const Eigen::VectorXd& r);

// Fits the longitudinal component of D(0) - D(r) to D1 |r|^2 at the grid-scale
// separations r = m (L/n) e_axis, m = 1..8, for every axis. Residual > 20%
// marks the set miscalibrated.
StructureFit effective_structure_fit(const VelocityModeSet& modes, const TorusGrid& grid);

// Populates every lattice shell with |k| in [k_min, k_max] with divergence-free
// polarizations and amplitudes ~ |k_phys|^{-(d+2)/2}, then rescales all
// amplitudes by one global constant so the fitted quadratic structure function
// matches spec.D1. The seed only rotates the degenerate polarization pairs in
// d = 3; the induced covariance does not depend on it.
VelocityModeSet synthesize_velocity_modes(const CovarianceSpec& spec, const TorusGrid& grid,
                                          int k_min, int k_max, std::uint64_t seed);

}  // namespace kmix
