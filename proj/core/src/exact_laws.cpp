#include "kmix/exact_laws.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kmix {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double lambda_ds(int d, double s, double D1) {
  if (d < 2) throw std::invalid_argument("lambda_ds: d must be >= 2");
  if (!(D1 > 0.0)) throw std::invalid_argument("lambda_ds: D1 must be > 0");
  if (!(s > 0.0) || !(s < d / 2.0))
    throw std::invalid_argument("lambda_ds: s must lie in (0, d/2)");
  return 2.0 * D1 * s * (d - 2.0 * s);
}

double riesz_constant(int d, double s) {
  if (d < 2) throw std::invalid_argument("riesz_constant: d must be >= 2");
  if (!(s > 0.0) || !(s < d / 2.0))
    throw std::invalid_argument(
        "riesz_constant: s must lie in (0, d/2) (Gamma arguments must be positive)");
  return std::pow(kPi, d / 2.0) * std::pow(2.0, 2.0 * s) * std::tgamma(s) /
         std::tgamma((d - 2.0 * s) / 2.0);
}

double riesz_potential(int d, double s, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("riesz_potential: rho must be > 0");
  return std::pow(rho, 2.0 * s - d) / riesz_constant(d, s);
}

double ode_residual(int d, double zeta, double lambda_over_D1, double alpha, int beta,
                    double z) {
  if (!(z > 0.0)) throw std::invalid_argument("ode_residual: z must be > 0");
  if (beta != 0 && beta != 1)
    throw std::invalid_argument("ode_residual: beta must be 0 or 1");
  if (beta == 1 && z == 1.0)
    throw std::invalid_argument("ode_residual: z = 1 is degenerate for beta = 1");

  const double lz = std::log(z);
  // Analytic derivatives of z^alpha ln^beta(z); no finite differences.
  double g, gp, gpp;
  if (beta == 0) {
    g = std::pow(z, alpha);
    gp = alpha * std::pow(z, alpha - 1.0);
    gpp = alpha * (alpha - 1.0) * std::pow(z, alpha - 2.0);
  } else {
    g = std::pow(z, alpha) * lz;
    gp = std::pow(z, alpha - 1.0) * (alpha * lz + 1.0);
    gpp = std::pow(z, alpha - 2.0) * (alpha * (alpha - 1.0) * lz + 2.0 * alpha - 1.0);
  }
  const double t1 = z * z * gpp;
  const double t2 = (d - 1.0 + zeta) * z * gp;
  const double t3 = lambda_over_D1 * std::pow(z, 2.0 - zeta) * g;
  const double scale = std::max({std::abs(t1), std::abs(t2), std::abs(t3)});
  if (scale == 0.0) return 0.0;
  return (t1 + t2 + t3) / scale;
}

ExponentSolution exponent_cases(int d, double zeta, double lambda_over_D1) {
  if (d < 2) throw std::invalid_argument("exponent_cases: d must be >= 2");
  if (!(zeta > 0.0 && zeta <= 2.0))
    throw std::invalid_argument("exponent_cases: zeta must lie in (0, 2]");

  if (lambda_over_D1 == 0.0) {
    return {2.0 - d - zeta, 0, ExponentCase::conserved, std::nullopt};
  }
  if (zeta != 2.0)
    throw std::invalid_argument(
        "exponent_cases: no power-law solution for lambda != 0 with zeta != 2");
  const double half_d = d / 2.0;
  const double disc = half_d * half_d - lambda_over_D1;
  if (disc < 0.0)
    throw std::invalid_argument(
        "exponent_cases: lambda/D1 > (d/2)^2 has no real exponent (out of scope)");
  if (disc == 0.0) {
    return {-half_d, 1, ExponentCase::logarithmic, std::nullopt};
  }
  const double root = std::sqrt(disc);
  return {-half_d + root, 0, ExponentCase::power_pair, -half_d - root};
}

LognormalLaw separation_law(int d, double D1, double rho0, double t) {
  if (d < 2) throw std::invalid_argument("separation_law: d must be >= 2");
  if (!(D1 > 0.0)) throw std::invalid_argument("separation_law: D1 must be > 0");
  if (!(rho0 > 0.0)) throw std::invalid_argument("separation_law: rho0 must be > 0");
  if (!(t >= 0.0)) throw std::invalid_argument("separation_law: t must be >= 0");
  return {std::log(rho0) + d * D1 * t, 2.0 * D1 * t};
}

double inverse_moment(int d, double s, double D1, double rho0, double t) {
  if (d < 2) throw std::invalid_argument("inverse_moment: d must be >= 2");
  if (!(s >= 0.0) || !(s < d / 2.0))
    throw std::invalid_argument("inverse_moment: s must lie in [0, d/2)");
  if (!(rho0 > 0.0)) throw std::invalid_argument("inverse_moment: rho0 must be > 0");
  const double rate = 2.0 * D1 * s * (d - 2.0 * s);  // zero at s = 0
  return std::exp(-rate * t) * std::pow(rho0, 2.0 * s - d);
}

}  // namespace kmix
