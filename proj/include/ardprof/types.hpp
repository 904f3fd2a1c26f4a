#pragma once

// Domain value types. All of them validate on construction and are immutable
// afterwards (except ModelParams, which the sampler mutates in place).

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ardprof {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Census-style counts: N, N_a, N_k and the cross-tabulation N_ak.
///
/// Subpopulation sizes and cross counts are optional per column because hidden
/// populations usually have neither.
struct PopulationMargins {
  std::int64_t total = 0;
  std::vector<std::string> alter_group_names;
  std::vector<std::int64_t> alter_group_sizes;
  std::vector<std::string> subpop_names;
  std::vector<std::optional<std::int64_t>> subpop_sizes;
  std::vector<std::optional<std::vector<std::int64_t>>> cross_counts;

  std::size_t num_alter_groups() const { return alter_group_sizes.size(); }
  std::size_t num_subpops() const { return subpop_names.size(); }
  bool has_cross_counts(std::size_t k) const { return cross_counts.at(k).has_value(); }

  // N_a / N, the random-mixing row.
  Eigen::VectorXd random_mixing() const;

  std::optional<std::size_t> subpop_index(const std::string& name) const;

  // Throws InputError when an invariant fails.
  void validate() const;

  // Same margins with subpop columns permuted to `order` (names must match).
  PopulationMargins reordered(const std::vector<std::string>& order) const;
};

/// Relative sizes h(a,k) of each subpopulation within each alter group.
///
/// Columns flagged latent carry placeholder values (zero) and are the targets
/// of estimation; the mask is constant within a column.
class ProfileMatrix {
 public:
  ProfileMatrix() = default;
  ProfileMatrix(std::vector<std::string> alter_group_names, std::vector<std::string> subpop_names,
                Eigen::MatrixXd values, std::vector<bool> latent_columns);

  // Known columns get N_ak / N_a; columns flagged latent are zero.
  static ProfileMatrix from_margins(const PopulationMargins& margins, const std::vector<bool>& latent_columns);

  std::size_t num_alter_groups() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t num_subpops() const { return static_cast<std::size_t>(values_.cols()); }
  const Eigen::MatrixXd& values() const { return values_; }
  double operator()(std::size_t a, std::size_t k) const { return values_(a, k); }

  const std::vector<std::string>& alter_group_names() const { return alter_group_names_; }
  const std::vector<std::string>& subpop_names() const { return subpop_names_; }

  bool is_latent(std::size_t k) const { return latent_.at(k); }
  const std::vector<bool>& latent_flags() const { return latent_; }
  MaskMatrix latent_mask() const;
  std::vector<std::size_t> known_columns() const;
  std::vector<std::size_t> latent_columns() const;
  // Position of column k among latent columns, if latent.
  std::optional<std::size_t> latent_index(std::size_t k) const;

  Eigen::MatrixXd known_submatrix() const;

  // Copy with the latent columns' values replaced (A x H, latent column order).
  ProfileMatrix with_latent_values(const Eigen::MatrixXd& latent) const;
  // Copy with latent values zeroed, i.e. what an analyst would observe.
  ProfileMatrix observed() const;
  ProfileMatrix reordered(const std::vector<std::string>& order) const;

 private:
  std::vector<std::string> alter_group_names_;
  std::vector<std::string> subpop_names_;
  Eigen::MatrixXd values_;
  std::vector<bool> latent_;
};

/// Observed ARD: y(i,k) ties from respondent i into subpopulation k.
class ArdDataset {
 public:
  ArdDataset() = default;
  ArdDataset(std::vector<std::string> respondent_ids, std::vector<std::size_t> ego_groups, CountMatrix counts,
             std::vector<std::string> subpop_names, std::vector<std::string> ego_group_names);

  std::size_t num_respondents() const { return static_cast<std::size_t>(counts_.rows()); }
  std::size_t num_subpops() const { return static_cast<std::size_t>(counts_.cols()); }
  std::size_t num_ego_groups() const { return ego_group_names_.size(); }

  const CountMatrix& counts() const { return counts_; }
  std::int64_t operator()(std::size_t i, std::size_t k) const { return counts_(i, k); }
  std::size_t ego_group(std::size_t i) const { return ego_groups_[i]; }
  const std::vector<std::size_t>& ego_groups() const { return ego_groups_; }
  const std::vector<std::string>& respondent_ids() const { return respondent_ids_; }
  const std::vector<std::string>& subpop_names() const { return subpop_names_; }
  const std::vector<std::string>& ego_group_names() const { return ego_group_names_; }

  std::optional<std::size_t> subpop_index(const std::string& name) const;

 private:
  std::vector<std::string> respondent_ids_;
  std::vector<std::size_t> ego_groups_;
  CountMatrix counts_;
  std::vector<std::string> subpop_names_;
  std::vector<std::string> ego_group_names_;
};

/// m(e,a): rows on the probability simplex.
class MixingMatrix {
 public:
  static constexpr double kRowTolerance = 1e-12;

  MixingMatrix() = default;
  // Rejects negative entries and rows whose sum is off by more than 1e-12.
  explicit MixingMatrix(Eigen::MatrixXd values);
  // Divides each row by its sum first.
  static MixingMatrix normalized(Eigen::MatrixXd raw);

  std::size_t num_ego_groups() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t num_alter_groups() const { return static_cast<std::size_t>(values_.cols()); }
  const Eigen::MatrixXd& values() const { return values_; }
  double operator()(std::size_t e, std::size_t a) const { return values_(e, a); }

  // Replaces one row; the row must already lie on the simplex.
  void set_row(std::size_t e, const Eigen::VectorXd& row);

 private:
  Eigen::MatrixXd values_;
};

struct Hyperparameters {
  double mu_d = 0.0;
  double sigma_d = 1.0;
  Eigen::VectorXd mu_m;     // per ego group
  Eigen::VectorXd sigma_m;  // per ego group
  double mu_h = 0.0;
  double sigma_h = 1.0;
};

/// Full parameter vector of the latent nonrandom mixing model.
struct ModelParams {
  Eigen::VectorXd log_degrees;
  MixingMatrix mixing;
  Eigen::VectorXd overdispersion;  // omega'_k > 1
  Eigen::MatrixXd latent_profile;  // A x H, columns in ProfileMatrix::latent_columns() order
  Hyperparameters hyper;

  double degree(std::size_t i) const;
  // Throws DomainError when any invariant fails.
  void validate() const;
};

// mu_ike = d_i * sum_a m(e(i),a) h(a,k). Latent columns read h from params.
double mean_ties(const ModelParams& params, const ProfileMatrix& profile, const ArdDataset& data, std::size_t i,
                 std::size_t k);

}  // namespace ardprof
