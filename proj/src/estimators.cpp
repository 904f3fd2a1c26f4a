#include "ardprof/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ardprof/diagnostics.hpp"
#include "ardprof/error.hpp"
#include "ardprof/kernels.hpp"
#include "ardprof/rng.hpp"

namespace ardprof {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::int64_t subpop_size(const PopulationMargins& margins, std::size_t k) {
  if (k >= margins.num_subpops() || !margins.subpop_sizes[k])
    throw InputError("subpopulation size N_k is required for known column " + std::to_string(k));
  return *margins.subpop_sizes[k];
}

const std::vector<std::int64_t>& cross(const PopulationMargins& margins, std::size_t k) {
  if (k >= margins.num_subpops() || !margins.cross_counts[k])
    throw InputError("cross counts N_ak are required for known column " + std::to_string(k));
  return *margins.cross_counts[k];
}

Eigen::VectorXd known_counts(const ArdDataset& data, std::size_t i, const std::vector<std::size_t>& cols) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    y[static_cast<Eigen::Index>(j)] = static_cast<double>(data(i, cols[j]));
  return y;
}

void require_same_columns(const std::vector<std::string>& a, const std::vector<std::string>& b, const char* what) {
  if (a != b) throw InputError(std::string("responses and ") + what + " list different subpopulation columns");
}

}  // namespace

Eigen::VectorXd scale_up_degree(const ArdDataset& data, const PopulationMargins& margins,
                                const std::vector<std::size_t>& known_cols) {
  if (known_cols.empty()) throw InputError("scale-up needs at least one known subpopulation");
  double size_sum = 0.0;
  for (auto k : known_cols) size_sum += static_cast<double>(subpop_size(margins, k));
  if (!(size_sum > 0.0)) throw InputError("known subpopulation sizes sum to zero");
  const double N = static_cast<double>(margins.total);
  Eigen::VectorXd d(static_cast<Eigen::Index>(data.num_respondents()));
  for (std::size_t i = 0; i < data.num_respondents(); ++i) {
    double ties = 0.0;
    for (auto k : known_cols) ties += static_cast<double>(data(i, k));
    d[static_cast<Eigen::Index>(i)] = ties / size_sum * N;
  }
  return d;
}

ScaledDownReport check_scaled_down(const PopulationMargins& margins, const std::vector<std::size_t>& known_cols,
                                   double tolerance) {
  ScaledDownReport report;
  report.tolerance = tolerance;
  double size_sum = 0.0;
  for (auto k : known_cols) size_sum += static_cast<double>(subpop_size(margins, k));
  report.target = size_sum / static_cast<double>(margins.total);
  for (std::size_t a = 0; a < margins.num_alter_groups(); ++a) {
    double share = 0.0;
    for (auto k : known_cols)
      share += static_cast<double>(cross(margins, k)[a]) / static_cast<double>(margins.alter_group_sizes[a]);
    report.deviation.push_back(share - report.target);
    report.max_abs_deviation = std::max(report.max_abs_deviation, std::abs(share - report.target));
  }
  report.pass = report.max_abs_deviation <= tolerance;
  return report;
}

Eigen::MatrixXd known_profile_block(const PopulationMargins& margins, const std::vector<std::size_t>& known_cols) {
  Eigen::MatrixXd h(static_cast<Eigen::Index>(margins.num_alter_groups()), static_cast<Eigen::Index>(known_cols.size()));
  for (std::size_t j = 0; j < known_cols.size(); ++j) {
    const auto& col = cross(margins, known_cols[j]);
    for (std::size_t a = 0; a < margins.num_alter_groups(); ++a)
      h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) =
          static_cast<double>(col[a]) / static_cast<double>(margins.alter_group_sizes[a]);
  }
  return h;
}

Eigen::VectorXd em_update(const Eigen::VectorXd& y, const Eigen::MatrixXd& h, const Eigen::VectorXd& m) {
  const double total = y.sum();
  if (!(total > 0.0)) throw InputError("EM mixing is undefined for a respondent with no known-column ties");
  Eigen::VectorXd next = Eigen::VectorXd::Zero(h.rows());
  for (Eigen::Index k = 0; k < h.cols(); ++k) {
    if (y[k] == 0.0) continue;
    // E-step: allocate y_ik across alter groups in proportion to m_a h(a,k).
    const Eigen::VectorXd weight = m.cwiseProduct(h.col(k));
    const double denom = weight.sum();
    if (!(denom > 0.0)) throw ModelError("EM: observed ties to a subpopulation with zero expected ties");
    next += y[k] * weight / denom;
  }
  // M-step.
  return next / total;
}

EmResult em_mixing(const Eigen::VectorXd& y, const Eigen::MatrixXd& h, const Eigen::VectorXd& init,
                   const EmOptions& options) {
  if (y.size() != h.cols() || init.size() != h.rows()) throw InputError("EM: dimension mismatch");
  EmResult r;
  r.trajectory.push_back(init);
  Eigen::VectorXd m = init;
  for (std::size_t t = 0; t < options.max_iterations; ++t) {
    Eigen::VectorXd next = em_update(y, h, m);
    const double change = (next - m).cwiseAbs().maxCoeff();
    m = std::move(next);
    r.trajectory.push_back(m);
    r.iterations = t + 1;
    if (change < options.tolerance) {
      r.converged = true;
      break;
    }
  }
  r.mixing = m;
  return r;
}

double poisson_observed_loglik(const Eigen::VectorXd& y, const Eigen::MatrixXd& h, const Eigen::VectorXd& m,
                               double degree) {
  double ll = 0.0;
  for (Eigen::Index k = 0; k < h.cols(); ++k)
    ll += poisson_logpmf(static_cast<std::int64_t>(y[k]), degree * m.dot(h.col(k)));
  return ll;
}

IndividualMixing simple_ratio_mixing(const ArdDataset& data, const PopulationMargins& margins,
                                     const std::vector<std::size_t>& known_cols) {
  const auto n = data.num_respondents();
  const auto A = margins.num_alter_groups();
  // Share of each known subpopulation falling in alter group a: N_ak / N_k.
  Eigen::MatrixXd share(static_cast<Eigen::Index>(A), static_cast<Eigen::Index>(known_cols.size()));
  for (std::size_t j = 0; j < known_cols.size(); ++j) {
    const double Nk = static_cast<double>(subpop_size(margins, known_cols[j]));
    const auto& col = cross(margins, known_cols[j]);
    for (std::size_t a = 0; a < A; ++a)
      share(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) = static_cast<double>(col[a]) / Nk;
  }

  IndividualMixing out;
  out.estimates = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(A), kNaN);
  out.valid.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd y = known_counts(data, i, known_cols);
    const double total = y.sum();
    if (total <= 0.0) {
      ++out.zero_rows;
      continue;
    }
    out.estimates.row(static_cast<Eigen::Index>(i)) = (share * y / total).transpose();
    out.valid[i] = true;
  }
  return out;
}

IndividualMixing em_mixing_all(const ArdDataset& data, const PopulationMargins& margins,
                               const std::vector<std::size_t>& known_cols, const EmOptions& options) {
  const auto n = data.num_respondents();
  const auto A = margins.num_alter_groups();
  const Eigen::MatrixXd h = known_profile_block(margins, known_cols);
  const Eigen::VectorXd init = margins.random_mixing();
  IndividualMixing out;
  out.estimates = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(A), kNaN);
  out.valid.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd y = known_counts(data, i, known_cols);
    if (y.sum() <= 0.0) {
      ++out.zero_rows;
      continue;
    }
    out.estimates.row(static_cast<Eigen::Index>(i)) = em_mixing(y, h, init, options).mixing.transpose();
    out.valid[i] = true;
  }
  return out;
}

Eigen::MatrixXd ego_average_mixing(const ArdDataset& data, const IndividualMixing& mixing, EgoWeighting weighting,
                                   const Eigen::VectorXd& degrees) {
  const auto E = static_cast<Eigen::Index>(data.num_ego_groups());
  const auto A = mixing.estimates.cols();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(E, A);
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(E);
  for (std::size_t i = 0; i < data.num_respondents(); ++i) {
    if (!mixing.valid[i]) continue;
    const double w = weighting == EgoWeighting::degree ? degrees[static_cast<Eigen::Index>(i)] : 1.0;
    const auto e = static_cast<Eigen::Index>(data.ego_group(i));
    sum.row(e) += w * mixing.estimates.row(static_cast<Eigen::Index>(i));
    weight[e] += w;
  }
  for (Eigen::Index e = 0; e < E; ++e) {
    if (weight[e] > 0.0)
      sum.row(e) /= weight[e];
    else
      sum.row(e).setConstant(kNaN);
  }
  return sum;
}

Eigen::MatrixXd regression_design(const Eigen::VectorXd& degrees, const Eigen::MatrixXd& mixing,
                                  const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), mixing.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(rows[r]);
    X.row(static_cast<Eigen::Index>(r)) = degrees[i] * mixing.row(i);
  }
  return X;
}

namespace {

// sigma_max / sigma_min over min(rows, cols) singular values.
double design_condition_number(const Eigen::MatrixXd& X) {
  if (X.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
  const Eigen::VectorXd sv = svd.singularValues();
  const double smallest = sv[sv.size() - 1];
  if (X.rows() < X.cols() || !(smallest > 0.0)) return std::numeric_limits<double>::infinity();
  return sv[0] / smallest;
}

LatentEstimate solve_latent(const ArdDataset& data, const Eigen::MatrixXd& X, const std::vector<std::size_t>& rows,
                            const std::vector<std::size_t>& latent_cols) {
  LatentEstimate est;
  est.rows_used = rows;
  est.profile = Eigen::MatrixXd::Zero(X.cols(), static_cast<Eigen::Index>(latent_cols.size()));
  if (rows.empty()) {
    est.warnings.push_back("no respondents with known-column ties; latent profiles left at zero");
    est.design_condition = std::numeric_limits<double>::infinity();
    return est;
  }
  if (static_cast<Eigen::Index>(rows.size()) < X.cols())
    est.warnings.push_back("fewer usable respondents than alter groups; regression design is rank deficient");
  est.design_condition = design_condition_number(X);
  for (std::size_t j = 0; j < latent_cols.size(); ++j) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      y[static_cast<Eigen::Index>(r)] = static_cast<double>(data(rows[r], latent_cols[j]));
    NnlsResult fit;
    try {
      fit = nnls_solve(X, y);
    } catch (const NnlsError& err) {
      est.warnings.push_back(std::string(err.what()) + " (column '" + data.subpop_names()[latent_cols[j]] + "')");
      fit = err.best_iterate();
    }
    est.profile.col(static_cast<Eigen::Index>(j)) = fit.coefficients;
    est.fits.push_back(std::move(fit));
  }
  return est;
}

}  // namespace

LatentEstimate estimate_latent_profiles(const ArdDataset& data, const Eigen::VectorXd& degrees,
                                        const IndividualMixing& mixing, const std::vector<std::size_t>& latent_cols) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.num_respondents(); ++i)
    if (mixing.valid[i]) rows.push_back(i);
  const Eigen::MatrixXd X = regression_design(degrees, mixing.estimates, rows);
  return solve_latent(data, X, rows, latent_cols);
}

SimpleFit fit_simple(const ArdDataset& data, const ProfileMatrix& profile, const PopulationMargins& margins,
                     const SimpleOptions& options) {
  require_same_columns(data.subpop_names(), profile.subpop_names(), "profiles");
  require_same_columns(data.subpop_names(), margins.subpop_names, "margins");
  if (profile.alter_group_names() != margins.alter_group_names)
    throw InputError("profiles and margins list different alter groups");

  const auto known = profile.known_columns();
  const auto latent = profile.latent_columns();
  SimpleFit fit;
  fit.rank = validate_identifiability(profile);
  if (options.require_identifiable && fit.rank.deficient) throw IdentifiabilityError(fit.rank.describe());
  fit.scaled_down = check_scaled_down(margins, known, options.scaled_down_tolerance);

  fit.degrees = scale_up_degree(data, margins, known);
  fit.individual = options.mixing == MixingMethod::em ? em_mixing_all(data, margins, known, options.em)
                                                      : simple_ratio_mixing(data, margins, known);
  fit.ego_mixing = ego_average_mixing(data, fit.individual, options.weighting, fit.degrees);
  fit.latent = estimate_latent_profiles(data, fit.degrees, fit.individual, latent);

  const auto A = static_cast<Eigen::Index>(profile.num_alter_groups());
  const auto H = static_cast<Eigen::Index>(latent.size());
  fit.latent_se = Eigen::MatrixXd::Constant(A, H, kNaN);
  for (auto& q : fit.latent_quantiles) q = Eigen::MatrixXd::Constant(A, H, kNaN);
  const auto& rows = fit.latent.rows_used;
  if (options.bootstrap < 2 || rows.empty() || H == 0) return fit;

  // Resample respondents; degrees and individual mixing are per-respondent
  // so only the regression is refit.
  const Eigen::MatrixXd X = regression_design(fit.degrees, fit.individual.estimates, rows);
  Rng rng = make_stream(options.seed, 0xb007);
  std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
  std::vector<std::vector<double>> samples(static_cast<std::size_t>(A * H));
  Eigen::MatrixXd Xb(X.rows(), X.cols());
  Eigen::VectorXd yb(X.rows());
  for (std::size_t b = 0; b < options.bootstrap; ++b) {
    std::vector<std::size_t> draw(rows.size());
    for (auto& r : draw) r = pick(rng);
    for (std::size_t r = 0; r < draw.size(); ++r) Xb.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(draw[r]));
    for (Eigen::Index j = 0; j < H; ++j) {
      for (std::size_t r = 0; r < draw.size(); ++r)
        yb[static_cast<Eigen::Index>(r)] = static_cast<double>(data(rows[draw[r]], latent[static_cast<std::size_t>(j)]));
      Eigen::VectorXd beta;
      try {
        beta = nnls_solve(Xb, yb).coefficients;
      } catch (const NnlsError& err) {
        beta = err.best_iterate().coefficients;
      }
      for (Eigen::Index a = 0; a < A; ++a) samples[static_cast<std::size_t>(j * A + a)].push_back(beta[a]);
    }
  }
  for (Eigen::Index j = 0; j < H; ++j) {
    for (Eigen::Index a = 0; a < A; ++a) {
      auto& s = samples[static_cast<std::size_t>(j * A + a)];
      fit.latent_se(a, j) = sample_sd(s);
      std::sort(s.begin(), s.end());
      for (std::size_t q = 0; q < kQuantileLevels.size(); ++q)
        fit.latent_quantiles[q](a, j) = quantile_sorted(s, kQuantileLevels[q]);
    }
  }
  return fit;
}

}  // namespace ardprof
