#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ardprof/types.hpp"

namespace ardprof {

// Mixing rates are identifiable only when the known-profile submatrix has
// full row rank A.
struct RankReport {
  std::size_t alter_groups = 0;
  std::size_t known_columns = 0;
  std::size_t rank = 0;
  double condition_number = 0.0;  // largest / smallest singular value; inf when singular
  std::vector<double> singular_values;
  bool deficient = true;

  std::string describe() const;
};

// Singular values below 1e-10 times the largest count as zero.
RankReport rank_report(const Eigen::MatrixXd& known_submatrix);
RankReport validate_identifiability(const ProfileMatrix& profile);

}  // namespace ardprof
