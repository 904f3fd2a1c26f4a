#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace ardprof {

struct NnlsResult {
  Eigen::VectorXd coefficients;
  double residual_norm = 0.0;
  std::vector<std::size_t> active_set;  // indices with a positive coefficient
  double kkt_max_violation = 0.0;
  std::size_t iterations = 0;
};

class NnlsError : public std::runtime_error {
 public:
  NnlsError(const std::string& what, NnlsResult best) : std::runtime_error(what), best_(std::move(best)) {}
  const NnlsResult& best_iterate() const { return best_; }

 private:
  NnlsResult best_;
};

struct NnlsOptions {
  std::size_t max_iterations = 0;  // 0 means 3 * number of columns
  double tolerance = -1.0;         // < 0 means 10 * eps * ||X||_1 * max(rows, cols)
};

// Lawson-Hanson active-set solution of min ||X b - y||^2 subject to b >= 0.
NnlsResult nnls_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const NnlsOptions& options = {});

// Largest KKT violation: |grad_a| on the active set, max(0, -grad_a) elsewhere,
// with grad = X^T (X b - y).
double nnls_kkt_violation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);

}  // namespace ardprof
