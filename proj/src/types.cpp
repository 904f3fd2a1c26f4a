#include "ardprof/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "ardprof/error.hpp"

namespace ardprof {

namespace {

std::vector<std::size_t> permutation_for(const std::vector<std::string>& current,
                                         const std::vector<std::string>& order, const char* what) {
  if (current.size() != order.size()) {
    std::ostringstream msg;
    msg << what << ": expected " << order.size() << " subpopulations, found " << current.size();
    throw InputError(msg.str());
  }
  std::vector<std::size_t> perm;
  perm.reserve(order.size());
  for (const auto& name : order) {
    auto it = std::find(current.begin(), current.end(), name);
    if (it == current.end()) throw InputError(std::string(what) + ": subpopulation '" + name + "' is missing");
    perm.push_back(static_cast<std::size_t>(it - current.begin()));
  }
  return perm;
}

}  // namespace

// ---------------------------------------------------------------------------
// PopulationMargins

Eigen::VectorXd PopulationMargins::random_mixing() const {
  Eigen::VectorXd m(static_cast<Eigen::Index>(alter_group_sizes.size()));
  for (std::size_t a = 0; a < alter_group_sizes.size(); ++a)
    m[static_cast<Eigen::Index>(a)] = static_cast<double>(alter_group_sizes[a]) / static_cast<double>(total);
  return m;
}

std::optional<std::size_t> PopulationMargins::subpop_index(const std::string& name) const {
  auto it = std::find(subpop_names.begin(), subpop_names.end(), name);
  if (it == subpop_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - subpop_names.begin());
}

void PopulationMargins::validate() const {
  if (total <= 0) throw InputError("total population N must be positive");
  if (alter_group_sizes.empty()) throw InputError("at least one alter group is required");
  if (alter_group_names.size() != alter_group_sizes.size())
    throw InputError("alter group names and sizes differ in length");
  if (subpop_sizes.size() != subpop_names.size() || cross_counts.size() != subpop_names.size())
    throw InputError("subpopulation names, sizes and cross counts differ in length");

  std::int64_t sum = 0;
  for (std::size_t a = 0; a < alter_group_sizes.size(); ++a) {
    if (alter_group_sizes[a] <= 0)
      throw InputError("alter group '" + alter_group_names[a] + "' must have a positive size");
    sum += alter_group_sizes[a];
  }
  if (sum != total) {
    std::ostringstream msg;
    msg << "alter group sizes sum to " << sum << " but N = " << total;
    throw InputError(msg.str());
  }

  for (std::size_t k = 0; k < subpop_names.size(); ++k) {
    const auto& name = subpop_names[k];
    if (subpop_sizes[k] && *subpop_sizes[k] <= 0)
      throw InputError("subpopulation '" + name + "' must have a positive size");
    if (!cross_counts[k]) continue;
    const auto& col = *cross_counts[k];
    if (col.size() != alter_group_sizes.size())
      throw InputError("cross counts for '" + name + "' do not cover every alter group");
    if (!subpop_sizes[k]) throw InputError("cross counts for '" + name + "' given without its total N_k");
    std::int64_t col_sum = 0;
    for (std::size_t a = 0; a < col.size(); ++a) {
      if (col[a] < 0 || col[a] > alter_group_sizes[a]) {
        std::ostringstream msg;
        msg << "cross count N_ak for ('" << alter_group_names[a] << "', '" << name << "') = " << col[a]
            << " is outside [0, N_a]";
        throw InputError(msg.str());
      }
      col_sum += col[a];
    }
    if (col_sum != *subpop_sizes[k]) {
      std::ostringstream msg;
      msg << "cross counts for '" << name << "' sum to " << col_sum << " but N_k = " << *subpop_sizes[k];
      throw InputError(msg.str());
    }
  }
}

PopulationMargins PopulationMargins::reordered(const std::vector<std::string>& order) const {
  const auto perm = permutation_for(subpop_names, order, "margins");
  PopulationMargins out = *this;
  for (std::size_t j = 0; j < perm.size(); ++j) {
    out.subpop_names[j] = subpop_names[perm[j]];
    out.subpop_sizes[j] = subpop_sizes[perm[j]];
    out.cross_counts[j] = cross_counts[perm[j]];
  }
  return out;
}

// ---------------------------------------------------------------------------
// ProfileMatrix

ProfileMatrix::ProfileMatrix(std::vector<std::string> alter_group_names, std::vector<std::string> subpop_names,
                             Eigen::MatrixXd values, std::vector<bool> latent_columns)
    : alter_group_names_(std::move(alter_group_names)),
      subpop_names_(std::move(subpop_names)),
      values_(std::move(values)),
      latent_(std::move(latent_columns)) {
  if (static_cast<std::size_t>(values_.rows()) != alter_group_names_.size() ||
      static_cast<std::size_t>(values_.cols()) != subpop_names_.size() || latent_.size() != subpop_names_.size())
    throw InputError("profile matrix dimensions do not match its names");
  for (Eigen::Index k = 0; k < values_.cols(); ++k) {
    for (Eigen::Index a = 0; a < values_.rows(); ++a) {
      const double v = values_(a, k);
      if (!std::isfinite(v) || v < 0.0)
        throw InputError("profile entry for ('" + alter_group_names_[a] + "', '" + subpop_names_[k] +
                         "') must be a finite nonnegative number");
      if (!latent_[k] && v > 1.0)
        throw InputError("known profile entry for ('" + alter_group_names_[a] + "', '" + subpop_names_[k] +
                         "') exceeds 1");
    }
  }
}

ProfileMatrix ProfileMatrix::from_margins(const PopulationMargins& margins, const std::vector<bool>& latent_columns) {
  margins.validate();
  const auto A = margins.num_alter_groups();
  const auto K = margins.num_subpops();
  if (latent_columns.size() != K) throw InputError("latent flags must cover every subpopulation");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(A), static_cast<Eigen::Index>(K));
  for (std::size_t k = 0; k < K; ++k) {
    if (latent_columns[k]) continue;
    if (!margins.has_cross_counts(k))
      throw InputError("known subpopulation '" + margins.subpop_names[k] + "' has no cross counts N_ak");
    const auto& col = *margins.cross_counts[k];
    for (std::size_t a = 0; a < A; ++a)
      h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) =
          static_cast<double>(col[a]) / static_cast<double>(margins.alter_group_sizes[a]);
  }
  return ProfileMatrix(margins.alter_group_names, margins.subpop_names, std::move(h), latent_columns);
}

MaskMatrix ProfileMatrix::latent_mask() const {
  MaskMatrix mask(values_.rows(), values_.cols());
  for (Eigen::Index k = 0; k < values_.cols(); ++k) mask.col(k).setConstant(latent_[static_cast<std::size_t>(k)]);
  return mask;
}

std::vector<std::size_t> ProfileMatrix::known_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < latent_.size(); ++k)
    if (!latent_[k]) out.push_back(k);
  return out;
}

std::vector<std::size_t> ProfileMatrix::latent_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < latent_.size(); ++k)
    if (latent_[k]) out.push_back(k);
  return out;
}

std::optional<std::size_t> ProfileMatrix::latent_index(std::size_t k) const {
  if (!latent_.at(k)) return std::nullopt;
  return static_cast<std::size_t>(std::count(latent_.begin(), latent_.begin() + static_cast<std::ptrdiff_t>(k), true));
}

Eigen::MatrixXd ProfileMatrix::known_submatrix() const {
  const auto cols = known_columns();
  Eigen::MatrixXd out(values_.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = values_.col(cols[j]);
  return out;
}

ProfileMatrix ProfileMatrix::with_latent_values(const Eigen::MatrixXd& latent) const {
  const auto cols = latent_columns();
  if (latent.rows() != values_.rows() || static_cast<std::size_t>(latent.cols()) != cols.size())
    throw InputError("latent profile block has the wrong shape");
  Eigen::MatrixXd v = values_;
  for (std::size_t j = 0; j < cols.size(); ++j) v.col(cols[j]) = latent.col(static_cast<Eigen::Index>(j));
  return ProfileMatrix(alter_group_names_, subpop_names_, std::move(v), latent_);
}

ProfileMatrix ProfileMatrix::observed() const {
  Eigen::MatrixXd v = values_;
  for (auto k : latent_columns()) v.col(static_cast<Eigen::Index>(k)).setZero();
  return ProfileMatrix(alter_group_names_, subpop_names_, std::move(v), latent_);
}

ProfileMatrix ProfileMatrix::reordered(const std::vector<std::string>& order) const {
  const auto perm = permutation_for(subpop_names_, order, "profiles");
  Eigen::MatrixXd v(values_.rows(), values_.cols());
  std::vector<std::string> names(perm.size());
  std::vector<bool> latent(perm.size());
  for (std::size_t j = 0; j < perm.size(); ++j) {
    v.col(static_cast<Eigen::Index>(j)) = values_.col(static_cast<Eigen::Index>(perm[j]));
    names[j] = subpop_names_[perm[j]];
    latent[j] = latent_[perm[j]];
  }
  return ProfileMatrix(alter_group_names_, std::move(names), std::move(v), std::move(latent));
}

// ---------------------------------------------------------------------------
// ArdDataset

ArdDataset::ArdDataset(std::vector<std::string> respondent_ids, std::vector<std::size_t> ego_groups,
                       CountMatrix counts, std::vector<std::string> subpop_names,
                       std::vector<std::string> ego_group_names)
    : respondent_ids_(std::move(respondent_ids)),
      ego_groups_(std::move(ego_groups)),
      counts_(std::move(counts)),
      subpop_names_(std::move(subpop_names)),
      ego_group_names_(std::move(ego_group_names)) {
  const auto n = static_cast<std::size_t>(counts_.rows());
  if (respondent_ids_.size() != n || ego_groups_.size() != n)
    throw InputError("respondent ids, ego groups and count rows differ in length");
  if (static_cast<std::size_t>(counts_.cols()) != subpop_names_.size())
    throw InputError("count columns do not match subpopulation names");
  for (std::size_t i = 0; i < n; ++i) {
    if (ego_groups_[i] >= ego_group_names_.size())
      throw InputError("respondent '" + respondent_ids_[i] + "' has an invalid ego group index");
  }
  if ((counts_.array() < 0).any()) throw InputError("tie counts must be nonnegative");
  std::set<std::string> seen;
  for (const auto& id : respondent_ids_)
    if (!seen.insert(id).second) throw InputError("duplicate respondent id '" + id + "'");
}

std::optional<std::size_t> ArdDataset::subpop_index(const std::string& name) const {
  auto it = std::find(subpop_names_.begin(), subpop_names_.end(), name);
  if (it == subpop_names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - subpop_names_.begin());
}

// ---------------------------------------------------------------------------
// MixingMatrix

namespace {

void check_simplex_row(const Eigen::VectorXd& row, std::size_t e) {
  if (!row.allFinite() || (row.array() < 0.0).any())
    throw DomainError("mixing row " + std::to_string(e) + " has a negative or non-finite entry");
  if (std::abs(row.sum() - 1.0) > MixingMatrix::kRowTolerance)
    throw DomainError("mixing row " + std::to_string(e) + " does not sum to one");
}

}  // namespace

MixingMatrix::MixingMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  for (Eigen::Index e = 0; e < values_.rows(); ++e) check_simplex_row(values_.row(e).transpose(), e);
}

MixingMatrix MixingMatrix::normalized(Eigen::MatrixXd raw) {
  for (Eigen::Index e = 0; e < raw.rows(); ++e) {
    const double s = raw.row(e).sum();
    if (!(s > 0.0)) throw DomainError("mixing row " + std::to_string(e) + " has no positive mass");
    raw.row(e) /= s;
  }
  return MixingMatrix(std::move(raw));
}

void MixingMatrix::set_row(std::size_t e, const Eigen::VectorXd& row) {
  if (row.size() != values_.cols()) throw DomainError("mixing row has the wrong length");
  check_simplex_row(row, e);
  values_.row(static_cast<Eigen::Index>(e)) = row.transpose();
}

// ---------------------------------------------------------------------------
// ModelParams

double ModelParams::degree(std::size_t i) const { return std::exp(log_degrees[static_cast<Eigen::Index>(i)]); }

void ModelParams::validate() const {
  if (!log_degrees.allFinite()) throw DomainError("log degrees must be finite");
  if (!((overdispersion.array() > 1.0).all()) || !overdispersion.allFinite())
    throw DomainError("every overdispersion must lie in (1, inf)");
  if (!latent_profile.allFinite() || (latent_profile.array() < 0.0).any())
    throw DomainError("latent profile entries must be finite and nonnegative");
  if (!(hyper.sigma_d > 0.0) || !(hyper.sigma_h > 0.0) || (hyper.sigma_m.array() <= 0.0).any())
    throw DomainError("hyperparameter scales must be positive");
  if (hyper.mu_m.size() != static_cast<Eigen::Index>(mixing.num_ego_groups()) ||
      hyper.sigma_m.size() != static_cast<Eigen::Index>(mixing.num_ego_groups()))
    throw DomainError("mixing hyperparameters must have one entry per ego group");
}

double mean_ties(const ModelParams& params, const ProfileMatrix& profile, const ArdDataset& data, std::size_t i,
                 std::size_t k) {
  if (i >= data.num_respondents()) throw std::out_of_range("respondent index out of range");
  if (k >= profile.num_subpops()) throw std::out_of_range("subpopulation index out of range");
  const auto e = static_cast<Eigen::Index>(data.ego_group(i));
  const auto latent = profile.latent_index(k);
  double inner = 0.0;
  for (std::size_t a = 0; a < profile.num_alter_groups(); ++a) {
    const auto ai = static_cast<Eigen::Index>(a);
    const double h = latent ? params.latent_profile(ai, static_cast<Eigen::Index>(*latent)) : profile(a, k);
    inner += params.mixing.values()(e, ai) * h;
  }
  if (!(inner > 0.0))
    throw DegenerateError("subpopulation '" + profile.subpop_names()[k] +
                          "' has zero expected ties for this ego group (all-zero profile column?)");
  return params.degree(i) * inner;
}

}  // namespace ardprof
