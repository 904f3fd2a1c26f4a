#pragma once

// The four probability kernels the model needs: negative binomial (mean mu,
// variance mu * omega), Poisson, normal and scaled inverse chi-squared.

#include <cstdint>

#include "ardprof/rng.hpp"

namespace ardprof {

double log_gamma(double x);

// log Gamma(xi + y) - log Gamma(xi), accurate for very large xi.
double log_rising_factorial(double xi, std::int64_t y);

double negbin_logpmf(std::int64_t y, double mu, double omega);

// Per-column constants of the negative binomial so the sampler does not
// recompute logs for every cell.
struct NegBinShape {
  double omega;
  double inv_excess;  // 1 / (omega - 1)
  double log_omega;   // log(omega), via log1p for omega near 1
  double log_ratio;   // log((omega - 1) / omega)

  explicit NegBinShape(double omega);

  // Log mass without the -log(y!) term, which cancels in every Metropolis
  // ratio. Returns -inf when mu <= 0 and y > 0.
  double unnormalized(std::int64_t y, double mu) const;
};

std::int64_t negbin_sample(Rng& rng, double mu, double omega);

double poisson_logpmf(std::int64_t y, double lambda);

double normal_logpdf(double x, double mean, double sd);

// Scaled inverse chi-squared with `dof` degrees of freedom and scale s2:
// draws dof * s2 / X with X ~ chi^2_dof.
double scaled_inv_chi2_sample(Rng& rng, double dof, double s2);
double scaled_inv_chi2_logpdf(double x, double dof, double s2);

}  // namespace ardprof
