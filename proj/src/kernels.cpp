#include "ardprof/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ardprof/error.hpp"

namespace ardprof {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Stirling series remainder: log Gamma(x) - [(x - 1/2) log x - x + log(2 pi)/2].
double stirling_remainder(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
}

void check_negbin_domain(double mu, double omega) {
  if (!(omega > 1.0) || !std::isfinite(omega))
    throw DomainError("negative binomial overdispersion must exceed 1, got " + std::to_string(omega));
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw DomainError("negative binomial mean must be positive, got " + std::to_string(mu));
}

}  // namespace

double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double log_rising_factorial(double xi, std::int64_t y) {
  if (y <= 0) return 0.0;
  if (y <= 32) {
    double sum = 0.0;
    for (std::int64_t j = 0; j < y; ++j) sum += std::log(xi + static_cast<double>(j));
    return sum;
  }
  const double yd = static_cast<double>(y);
  if (xi > 1e6) {
    // Both arguments are deep in the Stirling regime; subtract analytically so
    // the two huge log-gamma values never cancel in floating point.
    return yd * std::log(xi) + (xi + yd - 0.5) * std::log1p(yd / xi) - yd +
           stirling_remainder(xi + yd) - stirling_remainder(xi);
  }
  return log_gamma(xi + yd) - log_gamma(xi);
}

NegBinShape::NegBinShape(double omega_)
    : omega(omega_),
      inv_excess(1.0 / (omega_ - 1.0)),
      log_omega(std::log1p(omega_ - 1.0)),
      log_ratio(std::log(omega_ - 1.0) - std::log1p(omega_ - 1.0)) {
  if (!(omega_ > 1.0) || !std::isfinite(omega_))
    throw DomainError("negative binomial overdispersion must exceed 1, got " + std::to_string(omega_));
}

double NegBinShape::unnormalized(std::int64_t y, double mu) const {
  if (!(mu > 0.0)) return y == 0 ? 0.0 : kNegInf;
  const double xi = mu * inv_excess;
  return log_rising_factorial(xi, y) - xi * log_omega + static_cast<double>(y) * log_ratio;
}

double negbin_logpmf(std::int64_t y, double mu, double omega) {
  check_negbin_domain(mu, omega);
  if (y < 0) throw DomainError("negative binomial support is the nonnegative integers");
  const NegBinShape shape(omega);
  return shape.unnormalized(y, mu) - log_gamma(static_cast<double>(y) + 1.0);
}

std::int64_t negbin_sample(Rng& rng, double mu, double omega) {
  check_negbin_domain(mu, omega);
  // Gamma-Poisson mixture: rate ~ Gamma(mu / (omega - 1), omega - 1).
  const double excess = omega - 1.0;
  std::gamma_distribution<double> gamma(mu / excess, excess);
  const double rate = gamma(rng);
  if (!(rate > 0.0)) return 0;
  std::poisson_distribution<std::int64_t> poisson(rate);
  return poisson(rng);
}

double poisson_logpmf(std::int64_t y, double lambda) {
  if (y < 0) throw DomainError("Poisson support is the nonnegative integers");
  if (lambda < 0.0) throw DomainError("Poisson rate must be nonnegative");
  if (lambda == 0.0) return y == 0 ? 0.0 : kNegInf;
  const double yd = static_cast<double>(y);
  return yd * std::log(lambda) - lambda - log_gamma(yd + 1.0);
}

double normal_logpdf(double x, double mean, double sd) {
  if (!(sd > 0.0)) throw DomainError("normal standard deviation must be positive");
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double scaled_inv_chi2_sample(Rng& rng, double dof, double s2) {
  if (!(dof > 0.0) || !(s2 > 0.0)) throw DomainError("scaled inverse chi-squared needs dof > 0 and scale > 0");
  std::chi_squared_distribution<double> chi2(dof);
  return dof * s2 / chi2(rng);
}

double scaled_inv_chi2_logpdf(double x, double dof, double s2) {
  if (!(dof > 0.0) || !(s2 > 0.0)) throw DomainError("scaled inverse chi-squared needs dof > 0 and scale > 0");
  if (!(x > 0.0)) return kNegInf;
  const double half = 0.5 * dof;
  return half * std::log(half) - log_gamma(half) + half * std::log(s2) - (half + 1.0) * std::log(x) -
         dof * s2 / (2.0 * x);
}

}  // namespace ardprof
