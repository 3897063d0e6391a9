#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <fftw3.h>

// Periodic grid geometry, FFT workspaces, and the .krgrid snapshot format.
//
// Spectral convention: theta(x) = sum_k theta_hat[k] e^{i k_phys . x} with
// k_phys = (2 pi / L) * integer lattice vector. Coefficients are stored in the
// real-to-complex half lattice (last dimension 0..n/2). Under this
// normalization Parseval reads ||theta||^2_{L2(torus)} = L^d sum_k |theta_hat[k]|^2
// with the sum over the full (symmetric) lattice.

namespace kmix {

struct TorusGrid {
  int d = 0;     // 2 or 3
  int n = 0;     // points per dimension, power of two, >= 32
  double L = 0;  // period

  TorusGrid(int d_, int n_, double L_);

  int dealias_limit() const { return n / 3; }  // 2/3 * (n/2)
  double k_unit() const { return 2.0 * 3.14159265358979323846 / L; }
  std::size_t real_size() const;
  std::size_t spec_size() const;
  // Signed integer frequency for an index along a full (non-halved) dimension.
  int wave(int idx) const { return idx <= n / 2 ? idx : idx - n; }
};

// One FFT workspace per worker thread; plans are created under a global
// planner lock with FFTW_ESTIMATE so plans (and hence results) are identical
// run to run.
class FftWorkspace {
 public:
  explicit FftWorkspace(const TorusGrid& grid);
  ~FftWorkspace();
  FftWorkspace(const FftWorkspace&) = delete;
  FftWorkspace& operator=(const FftWorkspace&) = delete;

  const TorusGrid& grid() const { return grid_; }

  // spec -> real, unnormalized synthesis sum_k c_k e^{ikx}. Input preserved.
  void inverse(std::span<const std::complex<double>> spec, std::span<double> real);
  // real -> spec with 1/n^d, so coefficients are Fourier-series coefficients.
  void forward(std::span<const double> real, std::span<std::complex<double>> spec);

 private:
  TorusGrid grid_;
  fftw_plan c2r_ = nullptr;
  fftw_plan r2c_ = nullptr;
  fftw_complex* cbuf_ = nullptr;
  double* rbuf_ = nullptr;
};

// Flat binary snapshot: 32-byte header (magic "KRGRID01", u32 d, u32 n, f64 L,
// f64 t, little-endian) followed by n^d f64 values in row-major order.
void write_krgrid(const std::string& path, const TorusGrid& grid, double t,
                  std::span<const double> values);

struct KrGrid {
  int d = 0;
  int n = 0;
  double L = 0;
  double t = 0;
  std::vector<double> values;
};

KrGrid read_krgrid(const std::string& path);

}  // namespace kmix
