#pragma once

#include <optional>

// Closed-form laws used as oracles by every Monte Carlo module: the mixing
// rate lambda_{d,s}, Riesz potentials, the radial kernel ODE with its three
// exponent cases, and the lognormal law of the particle separation.

namespace kmix {

enum class ExponentCase { conserved, power_pair, logarithmic };

// Solution G(z) = z^alpha ln^beta(z) of the radial kernel ODE.
struct ExponentSolution {
  double alpha = 0.0;
  int beta = 0;  // 1 only in the logarithmic case
  ExponentCase case_label = ExponentCase::conserved;
  std::optional<double> second_alpha;  // the other root in the power pair
};

// Law of log |R_t|: Normal(mu, sigma2).
struct LognormalLaw {
  double mu = 0.0;
  double sigma2 = 0.0;
};

// lambda_{d,s} = 2 D1 s (d - 2s), for s in (0, d/2).
double lambda_ds(int d, double s, double D1);

// c_{d,s} = pi^{d/2} 2^{2s} Gamma(s) / Gamma((d-2s)/2), for s in (0, d/2).
double riesz_constant(int d, double s);

// I_s(rho) = rho^{2s-d} / c_{d,s}, rho > 0.
double riesz_potential(int d, double s, double rho);

// Residual of z^2 G'' + (d-1+zeta) z G' + (lambda/D1) z^{2-zeta} G on
// G(z) = z^alpha ln^beta(z), evaluated analytically and normalized by the
// largest term magnitude. beta must be 0 or 1; z=1 with beta=1 is rejected.
double ode_residual(int d, double zeta, double lambda_over_D1, double alpha, int beta,
                    double z);

// Enumerates the kernel-ODE solutions:
//  (a) lambda = 0:          alpha = 2 - d - zeta, beta = 0  (conserved quantity)
//  (b) zeta = 2, 0 < lambda/D1 < (d/2)^2: alpha = -d/2 +- sqrt((d/2)^2 - lambda/D1)
//  (c) zeta = 2, lambda/D1 = (d/2)^2:     alpha = -d/2, beta = 1
// lambda != 0 with zeta != 2 and lambda/D1 > (d/2)^2 are rejected.
ExponentSolution exponent_cases(int d, double zeta, double lambda_over_D1);

// Exact law of log |R_t| for the separation process started at |R_0| = rho0:
//   mu = ln(rho0) + d D1 t,  sigma2 = 2 D1 t.
LognormalLaw separation_law(int d, double D1, double rho0, double t);

// E[|R_t|^{2s-d}] = e^{-lambda_{d,s} t} rho0^{2s-d}, for s in [0, d/2).
// s = 0 gives the statistically conserved quantity rho0^{-d}.
double inverse_moment(int d, double s, double D1, double rho0, double t);

}  // namespace kmix
