#pragma once

// Closed-form and EM/regression estimators: scale-up degrees, the scaled-down
// check, individual mixing rates (one-step ratio or converged EM), and
// nonnegative regression for latent profiles.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ardprof/identifiability.hpp"
#include "ardprof/nnls.hpp"
#include "ardprof/types.hpp"

namespace ardprof {

// d_i = (sum_k y_ik / sum_k N_k) * N over the known columns.
Eigen::VectorXd scale_up_degree(const ArdDataset& data, const PopulationMargins& margins,
                                const std::vector<std::size_t>& known_cols);

struct ScaledDownReport {
  double target = 0.0;             // sum_k N_k / N
  std::vector<double> deviation;   // per alter group: sum_k N_ak / N_a - target
  double max_abs_deviation = 0.0;
  double tolerance = 1e-6;
  bool pass = false;
};

ScaledDownReport check_scaled_down(const PopulationMargins& margins, const std::vector<std::size_t>& known_cols,
                                   double tolerance = 1e-6);

struct EmOptions {
  std::size_t max_iterations = 500;
  double tolerance = 1e-10;  // on the max-abs change of the mixing vector
};

struct EmResult {
  Eigen::VectorXd mixing;
  std::vector<Eigen::VectorXd> trajectory;  // m^(0), m^(1), ..., final
  std::size_t iterations = 0;
  bool converged = false;
};

// One E-step + M-step. `counts` are y_ik over the known columns and `profile`
// the matching A x K' block of h(a,k) = N_ak / N_a.
Eigen::VectorXd em_update(const Eigen::VectorXd& counts, const Eigen::MatrixXd& profile, const Eigen::VectorXd& m);

// Requires sum_k y_ik > 0 (throws InputError otherwise).
EmResult em_mixing(const Eigen::VectorXd& counts, const Eigen::MatrixXd& profile, const Eigen::VectorXd& init,
                   const EmOptions& options = {});

// Poisson observed-data log-likelihood of one respondent's known-column counts,
// y_ik ~ Poisson(d * sum_a m_a h(a,k)).
double poisson_observed_loglik(const Eigen::VectorXd& counts, const Eigen::MatrixXd& profile,
                               const Eigen::VectorXd& m, double degree);

// Known-column block of h(a,k) = N_ak / N_a taken from the margins.
Eigen::MatrixXd known_profile_block(const PopulationMargins& margins, const std::vector<std::size_t>& known_cols);

struct IndividualMixing {
  Eigen::MatrixXd estimates;  // n x A; rows of invalid respondents are NaN
  std::vector<bool> valid;
  std::size_t zero_rows = 0;  // respondents with no ties to any known column
};

// m_ia = sum_k y_ik (N_ak / N_k) / sum_k y_ik.
IndividualMixing simple_ratio_mixing(const ArdDataset& data, const PopulationMargins& margins,
                                     const std::vector<std::size_t>& known_cols);

// Converged EM from random mixing N_a / N for every usable respondent.
IndividualMixing em_mixing_all(const ArdDataset& data, const PopulationMargins& margins,
                               const std::vector<std::size_t>& known_cols, const EmOptions& options = {});

enum class EgoWeighting { unweighted, degree };

// E x A average of the individual estimates within each ego group. Groups
// without usable respondents come back as NaN rows.
Eigen::MatrixXd ego_average_mixing(const ArdDataset& data, const IndividualMixing& mixing, EgoWeighting weighting,
                                   const Eigen::VectorXd& degrees);

struct LatentEstimate {
  Eigen::MatrixXd profile;  // A x H
  std::vector<NnlsResult> fits;
  std::vector<std::size_t> rows_used;
  double design_condition = 0.0;
  std::vector<std::string> warnings;
};

// Design with rows d_i * m_ia for the given respondents.
Eigen::MatrixXd regression_design(const Eigen::VectorXd& degrees, const Eigen::MatrixXd& mixing,
                                  const std::vector<std::size_t>& rows);

LatentEstimate estimate_latent_profiles(const ArdDataset& data, const Eigen::VectorXd& degrees,
                                        const IndividualMixing& mixing, const std::vector<std::size_t>& latent_cols);

enum class MixingMethod { ratio, em };

inline constexpr std::array<double, 5> kQuantileLevels{0.025, 0.25, 0.5, 0.75, 0.975};

struct SimpleOptions {
  MixingMethod mixing = MixingMethod::ratio;
  EgoWeighting weighting = EgoWeighting::unweighted;
  std::size_t bootstrap = 200;
  std::uint64_t seed = 0;
  EmOptions em;
  double scaled_down_tolerance = 1e-6;
  bool require_identifiable = true;
};

struct SimpleFit {
  Eigen::VectorXd degrees;
  IndividualMixing individual;
  Eigen::MatrixXd ego_mixing;
  LatentEstimate latent;
  Eigen::MatrixXd latent_se;                   // A x H bootstrap standard errors (NaN without bootstrap)
  std::array<Eigen::MatrixXd, 5> latent_quantiles;  // bootstrap quantiles at kQuantileLevels
  ScaledDownReport scaled_down;
  RankReport rank;
};

// Scale-up degrees -> ratio (or EM) mixing -> NNLS latent profiles, with
// bootstrap over respondents for the latent-profile uncertainty. The three
// inputs must share column order.
SimpleFit fit_simple(const ArdDataset& data, const ProfileMatrix& profile, const PopulationMargins& margins,
                     const SimpleOptions& options = {});

}  // namespace ardprof
