#pragma once

// Reference implementations used only by tests. Each one is written without
// calling into the library code it checks.

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "ardprof/types.hpp"

namespace oracle {

// Asymptotic Kolmogorov tail Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic;
  double p_value;
};

// One-sample KS with Stephens' small-sample correction.
inline KsResult ks_test(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

inline double normal_cdf(double x, double mean, double sd) {
  return boost::math::cdf(boost::math::normal_distribution<>(mean, sd), x);
}

// CDF of v = dof * s2 / X, X ~ chi^2(dof).
inline double scaled_inv_chi2_cdf(double v, double dof, double s2) {
  if (v <= 0.0) return 0.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<>(dof), dof * s2 / v));
}

// NB(mean mu, variance mu * w) log pmf straight from the gamma-function form.
inline double negbin_logpmf(std::int64_t y, double mu, double w) {
  const double xi = mu / (w - 1.0);
  const double yy = static_cast<double>(y);
  return std::lgamma(xi + yy) - std::lgamma(xi) - std::lgamma(yy + 1.0) + yy * std::log((w - 1.0) / w) -
         xi * std::log(w);
}

inline double normal_logpdf(double x, double m, double s) {
  const double z = (x - m) / s;
  return -0.5 * z * z - std::log(s) - 0.5 * std::log(2.0 * M_PI);
}

// mu_ik by explicit loops over alter groups.
inline double mean_ties(double degree, const Eigen::MatrixXd& mixing, std::size_t e, const Eigen::MatrixXd& h,
                        std::size_t k) {
  double s = 0.0;
  for (Eigen::Index a = 0; a < mixing.cols(); ++a)
    s += mixing(static_cast<Eigen::Index>(e), a) * h(a, static_cast<Eigen::Index>(k));
  return degree * s;
}

// Full unnormalized log posterior, one term at a time.
inline double log_posterior(const ardprof::ModelParams& p, const ardprof::ArdDataset& data,
                            const ardprof::ProfileMatrix& profile) {
  const auto A = profile.num_alter_groups();
  Eigen::MatrixXd h = profile.values();
  std::size_t j = 0;
  for (std::size_t k = 0; k < profile.num_subpops(); ++k) {
    if (!profile.is_latent(k)) continue;
    for (std::size_t a = 0; a < A; ++a)
      h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) =
          p.latent_profile(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j));
    ++j;
  }
  double lp = 0.0;
  for (std::size_t i = 0; i < data.num_respondents(); ++i) {
    const double d = std::exp(p.log_degrees[static_cast<Eigen::Index>(i)]);
    for (std::size_t k = 0; k < data.num_subpops(); ++k) {
      const double mu = mean_ties(d, p.mixing.values(), data.ego_group(i), h, k);
      lp += negbin_logpmf(data(i, k), mu, p.overdispersion[static_cast<Eigen::Index>(k)]);
    }
    lp += normal_logpdf(p.log_degrees[static_cast<Eigen::Index>(i)], p.hyper.mu_d, p.hyper.sigma_d);
  }
  for (Eigen::Index e = 0; e < p.mixing.values().rows(); ++e)
    for (Eigen::Index a = 0; a < p.mixing.values().cols(); ++a)
      lp += normal_logpdf(p.mixing.values()(e, a), p.hyper.mu_m[e], p.hyper.sigma_m[e]);
  for (Eigen::Index k = 0; k < p.overdispersion.size(); ++k) lp += -2.0 * std::log(p.overdispersion[k]);
  for (Eigen::Index c = 0; c < p.latent_profile.cols(); ++c)
    for (Eigen::Index a = 0; a < p.latent_profile.rows(); ++a)
      lp += normal_logpdf(std::log(p.latent_profile(a, c)), p.hyper.mu_h, p.hyper.sigma_h);
  return lp;
}

// Exhaustive NNLS: least squares on every support set, keep the best feasible.
inline Eigen::VectorXd nnls_enumerate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const auto p = X.cols();
  Eigen::VectorXd best = Eigen::VectorXd::Zero(p);
  double best_rss = y.squaredNorm();
  for (unsigned mask = 1; mask < (1u << p); ++mask) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index c = 0; c < p; ++c)
      if (mask & (1u << c)) cols.push_back(c);
    Eigen::MatrixXd Xs(X.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) Xs.col(static_cast<Eigen::Index>(c)) = X.col(cols[c]);
    const Eigen::VectorXd bs = Xs.colPivHouseholderQr().solve(y);
    if ((bs.array() < 0.0).any()) continue;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    for (std::size_t c = 0; c < cols.size(); ++c) b[cols[c]] = bs[static_cast<Eigen::Index>(c)];
    const double rss = (X * b - y).squaredNorm();
    if (rss < best_rss) {
      best_rss = rss;
      best = b;
    }
  }
  return best;
}

// Composite Simpson on [lo, hi] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int n) {
  const double step = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += f(lo + i * step) * (i % 2 ? 4.0 : 2.0);
  return s * step / 3.0;
}

}  // namespace oracle
