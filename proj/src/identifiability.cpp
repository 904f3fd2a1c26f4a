#include "ardprof/identifiability.hpp"

#include <limits>
#include <sstream>

namespace ardprof {

RankReport rank_report(const Eigen::MatrixXd& known) {
  RankReport report;
  report.alter_groups = static_cast<std::size_t>(known.rows());
  report.known_columns = static_cast<std::size_t>(known.cols());
  if (known.size() == 0) return report;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(known);
  const Eigen::VectorXd sv = svd.singularValues();
  report.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double largest = sv.size() > 0 ? sv[0] : 0.0;
  const double cutoff = 1e-10 * largest;
  for (Eigen::Index j = 0; j < sv.size(); ++j)
    if (sv[j] > cutoff) ++report.rank;

  // Fewer columns than rows leaves implicit zero singular values.
  const bool square_or_wide = known.cols() >= known.rows();
  const double smallest = square_or_wide ? sv[sv.size() - 1] : 0.0;
  report.condition_number = smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity();
  report.deficient = report.rank < report.alter_groups;
  return report;
}

RankReport validate_identifiability(const ProfileMatrix& profile) { return rank_report(profile.known_submatrix()); }

std::string RankReport::describe() const {
  std::ostringstream out;
  out << "known-profile rank " << rank << " of " << alter_groups << " alter groups (" << known_columns
      << " known columns, condition number " << condition_number << ")";
  if (deficient) out << " -- mixing rates are NOT identifiable";
  return out.str();
}

}  // namespace ardprof
