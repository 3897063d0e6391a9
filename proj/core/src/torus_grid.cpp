#include "kmix/torus_grid.hpp"

#include <cstring>
#include <fstream>
#include <mutex>
#include <stdexcept>

namespace kmix {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

TorusGrid::TorusGrid(int d_, int n_, double L_) : d(d_), n(n_), L(L_) {
  if (d != 2 && d != 3) throw std::invalid_argument("TorusGrid: d must be 2 or 3");
  if (n < 32) throw std::invalid_argument("TorusGrid: n must be >= 32");
  if (!power_of_two(n)) throw std::invalid_argument("TorusGrid: n must be a power of two");
  if (!(L > 0.0)) throw std::invalid_argument("TorusGrid: L must be > 0");
}

std::size_t TorusGrid::real_size() const {
  std::size_t s = 1;
  for (int i = 0; i < d; ++i) s *= static_cast<std::size_t>(n);
  return s;
}

std::size_t TorusGrid::spec_size() const {
  std::size_t s = static_cast<std::size_t>(n / 2 + 1);
  for (int i = 0; i < d - 1; ++i) s *= static_cast<std::size_t>(n);
  return s;
}

FftWorkspace::FftWorkspace(const TorusGrid& grid) : grid_(grid) {
  std::lock_guard<std::mutex> lock(planner_mutex());
  cbuf_ = fftw_alloc_complex(grid_.spec_size());
  rbuf_ = fftw_alloc_real(grid_.real_size());
  if (!cbuf_ || !rbuf_) throw std::bad_alloc();
  const int n = grid_.n;
  if (grid_.d == 2) {
    c2r_ = fftw_plan_dft_c2r_2d(n, n, cbuf_, rbuf_, FFTW_ESTIMATE);
    r2c_ = fftw_plan_dft_r2c_2d(n, n, rbuf_, cbuf_, FFTW_ESTIMATE);
  } else {
    c2r_ = fftw_plan_dft_c2r_3d(n, n, n, cbuf_, rbuf_, FFTW_ESTIMATE);
    r2c_ = fftw_plan_dft_r2c_3d(n, n, n, rbuf_, cbuf_, FFTW_ESTIMATE);
  }
  if (!c2r_ || !r2c_) throw std::runtime_error("FftWorkspace: plan creation failed");
}

FftWorkspace::~FftWorkspace() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (c2r_) fftw_destroy_plan(c2r_);
  if (r2c_) fftw_destroy_plan(r2c_);
  if (cbuf_) fftw_free(cbuf_);
  if (rbuf_) fftw_free(rbuf_);
}

void FftWorkspace::inverse(std::span<const std::complex<double>> spec,
                           std::span<double> real) {
  if (spec.size() != grid_.spec_size() || real.size() != grid_.real_size())
    throw std::invalid_argument("FftWorkspace::inverse: size mismatch");
  std::memcpy(cbuf_, spec.data(), spec.size() * sizeof(fftw_complex));
  fftw_execute(c2r_);
  std::memcpy(real.data(), rbuf_, real.size() * sizeof(double));
}

void FftWorkspace::forward(std::span<const double> real,
                           std::span<std::complex<double>> spec) {
  if (spec.size() != grid_.spec_size() || real.size() != grid_.real_size())
    throw std::invalid_argument("FftWorkspace::forward: size mismatch");
  std::memcpy(rbuf_, real.data(), real.size() * sizeof(double));
  fftw_execute(r2c_);
  const double scale = 1.0 / static_cast<double>(grid_.real_size());
  auto* c = reinterpret_cast<std::complex<double>*>(cbuf_);
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] = c[i] * scale;
}

void write_krgrid(const std::string& path, const TorusGrid& grid, double t,
                  std::span<const double> values) {
  if (values.size() != grid.real_size())
    throw std::invalid_argument("write_krgrid: value count does not match grid");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_krgrid: cannot open " + path);
  const char magic[8] = {'K', 'R', 'G', 'R', 'I', 'D', '0', '1'};
  out.write(magic, 8);
  const std::uint32_t d32 = static_cast<std::uint32_t>(grid.d);
  const std::uint32_t n32 = static_cast<std::uint32_t>(grid.n);
  out.write(reinterpret_cast<const char*>(&d32), 4);
  out.write(reinterpret_cast<const char*>(&n32), 4);
  out.write(reinterpret_cast<const char*>(&grid.L), 8);
  out.write(reinterpret_cast<const char*>(&t), 8);
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write_krgrid: write failed for " + path);
}

KrGrid read_krgrid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_krgrid: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "KRGRID01", 8) != 0)
    throw std::runtime_error("read_krgrid: bad magic in " + path);
  std::uint32_t d32 = 0, n32 = 0;
  KrGrid g;
  in.read(reinterpret_cast<char*>(&d32), 4);
  in.read(reinterpret_cast<char*>(&n32), 4);
  in.read(reinterpret_cast<char*>(&g.L), 8);
  in.read(reinterpret_cast<char*>(&g.t), 8);
  g.d = static_cast<int>(d32);
  g.n = static_cast<int>(n32);
  std::size_t count = 1;
  for (int i = 0; i < g.d; ++i) count *= static_cast<std::size_t>(g.n);
  g.values.resize(count);
  in.read(reinterpret_cast<char*>(g.values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("read_krgrid: truncated file " + path);
  return g;
}

}  // namespace kmix
