#include "kmix/covariance.hpp"

#include <stdexcept>
#include <string>

namespace kmix {

void CovarianceSpec::validate() const {
  if (d < 2) throw std::invalid_argument("CovarianceSpec: d must be >= 2");
  if (!(D1 > 0.0)) throw std::invalid_argument("CovarianceSpec: D1 must be > 0");
  if (!(D0 > 0.0)) throw std::invalid_argument("CovarianceSpec: D0 must be > 0");
  if (!(zeta > 0.0) || !(zeta <= 2.0))
    throw std::invalid_argument("CovarianceSpec: zeta must lie in (0, 2]");
}

void CovarianceSpec::require_smooth(const char* op) const {
  validate();
  if (zeta != 2.0)
    throw std::invalid_argument(std::string(op) +
                                ": requires zeta == 2 (field gradients do not exist at "
                                "coincident points for zeta < 2)");
}

Eigen::MatrixXd Rank4Tensor::as_matrix() const {
  const int n = d * d;
  Eigen::MatrixXd m(n, n);
  for (int row = 0; row < n; ++row)
    for (int col = 0; col < n; ++col)
      m(row, col) = entries[static_cast<std::size_t>(row * n + col)];
  return m;
}

Eigen::MatrixXd structure_tensor(const CovarianceSpec& spec, const Eigen::VectorXd& r) {
  spec.validate();
  if (r.size() != spec.d)
    throw std::invalid_argument("structure_tensor: r has wrong dimension");
  const int d = spec.d;
  const double rho = r.norm();
  if (rho == 0.0) return Eigen::MatrixXd::Zero(d, d);
  const Eigen::VectorXd rhat = r / rho;
  const double amp = spec.D1 * std::pow(rho, spec.zeta);
  const double c = spec.zeta / (d - 1.0);
  return amp * ((1.0 + c) * Eigen::MatrixXd::Identity(d, d) -
                c * (rhat * rhat.transpose()));
}

Rank4Tensor gradient_covariance_tensor(const CovarianceSpec& spec) {
  spec.require_smooth("gradient_covariance_tensor");
  const int d = spec.d;
  Rank4Tensor t;
  t.d = d;
  t.entries.assign(static_cast<std::size_t>(d) * d * d * d, 0.0);
  const double a = 2.0 * spec.D1 * (d + 1.0) / (d - 1.0);
  const double b = 2.0 * spec.D1 / (d - 1.0);
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j)
      for (int m = 0; m < d; ++m)
        for (int l = 0; l < d; ++l) {
          double v = 0.0;
          if (k == m && j == l) v += a;
          if (k == j && m == l) v -= b;
          if (m == j && k == l) v -= b;
          t.at(k, j, m, l) = v;
        }
  return t;
}

Eigen::MatrixXd strain_trace_matrix(const CovarianceSpec& spec) {
  spec.require_smooth("strain_trace_matrix");
  return 2.0 * spec.D1 * (spec.d + 2.0) *
         Eigen::MatrixXd::Identity(spec.d, spec.d);
}

Eigen::MatrixXd diffusion_sqrt(const CovarianceSpec& spec, const Eigen::VectorXd& r) {
  spec.require_smooth("diffusion_sqrt");
  if (r.size() != spec.d)
    throw std::invalid_argument("diffusion_sqrt: r has wrong dimension");
  if (r.norm() == 0.0)
    throw std::invalid_argument(
        "diffusion_sqrt: r = 0 is the absorbing point of the separation process");
  const int d = spec.d;
  Eigen::MatrixXd sigma(d, d);
  Eigen::VectorXd basis = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd col(d);
  for (int j = 0; j < d; ++j) {
    basis(j) = 1.0;
    detail::apply_diffusion_sqrt(spec.D1, d, r.data(), basis.data(), col.data());
    sigma.col(j) = col;
    basis(j) = 0.0;
  }
  return sigma;
}

std::pair<double, double> example_spectral_constants(int d, double m, double Dbar0) {
  if (d < 2) throw std::invalid_argument("example_spectral_constants: d must be >= 2");
  if (!(m > 0.0)) throw std::invalid_argument("example_spectral_constants: m must be > 0");
  if (!(Dbar0 > 0.0))
    throw std::invalid_argument("example_spectral_constants: Dbar0 must be > 0");
  const double pi = 3.14159265358979323846;
  const double denom = std::pow(4.0 * pi, d / 2.0) * std::tgamma((d + 2.0) / 2.0);
  const double d0 = Dbar0 / (m * m) * (d - 1.0) / (d * denom);
  const double d1 = Dbar0 * (d - 1.0) / ((d + 2.0) * denom);
  return {d0, d1};
}

}  // namespace kmix
