#include "ardprof/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ardprof {

namespace {

Eigen::VectorXd solve_passive(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<bool>& passive) {
  std::vector<Eigen::Index> idx;
  for (std::size_t j = 0; j < passive.size(); ++j)
    if (passive[j]) idx.push_back(static_cast<Eigen::Index>(j));
  if (idx.empty()) return Eigen::VectorXd::Zero(X.cols());
  Eigen::MatrixXd sub(X.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = X.col(idx[j]);
  const Eigen::VectorXd z = sub.colPivHouseholderQr().solve(y);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(X.cols());
  for (std::size_t j = 0; j < idx.size(); ++j) full[idx[j]] = z[static_cast<Eigen::Index>(j)];
  return full;
}

NnlsResult finalize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Eigen::VectorXd beta, std::size_t iters) {
  NnlsResult r;
  beta = beta.cwiseMax(0.0);
  r.residual_norm = (X * beta - y).norm();
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (beta[j] > 0.0) r.active_set.push_back(static_cast<std::size_t>(j));
  r.kkt_max_violation = nnls_kkt_violation(X, y, beta);
  r.coefficients = std::move(beta);
  r.iterations = iters;
  return r;
}

}  // namespace

double nnls_kkt_violation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd grad = X.transpose() * (X * beta - y);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double v = beta[j] > 0.0 ? std::abs(grad[j]) : std::max(0.0, -grad[j]);
    worst = std::max(worst, v);
  }
  return worst;
}

NnlsResult nnls_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const NnlsOptions& options) {
  if (X.rows() != y.size()) throw std::invalid_argument("nnls: design rows and response length differ");
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("nnls: empty problem");
  if (!X.allFinite() || !y.allFinite()) throw std::invalid_argument("nnls: non-finite input");

  const auto p = static_cast<std::size_t>(X.cols());
  const std::size_t max_iter = options.max_iterations ? options.max_iterations : 3 * p;
  const double tol = options.tolerance >= 0.0
                         ? options.tolerance
                         : 10.0 * std::numeric_limits<double>::epsilon() * X.cwiseAbs().colwise().sum().maxCoeff() *
                               static_cast<double>(std::max(X.rows(), X.cols()));

  std::vector<bool> passive(p, false);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  Eigen::VectorXd w = X.transpose() * (y - X * beta);
  std::size_t iter = 0;

  while (true) {
    // Most positive gradient among the zero-constrained variables.
    Eigen::Index t = -1;
    double best = tol;
    for (std::size_t j = 0; j < p; ++j) {
      if (!passive[j] && w[static_cast<Eigen::Index>(j)] > best) {
        best = w[static_cast<Eigen::Index>(j)];
        t = static_cast<Eigen::Index>(j);
      }
    }
    if (t < 0) break;
    if (iter >= max_iter)
      throw NnlsError("nnls: iteration cap reached before convergence", finalize(X, y, beta, iter));
    ++iter;
    passive[static_cast<std::size_t>(t)] = true;

    Eigen::VectorXd s = solve_passive(X, y, passive);
    // Inner loop: step back toward feasibility while a passive coefficient
    // would go nonpositive.
    std::size_t inner = 0;
    while (true) {
      double alpha = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < p; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        if (passive[j] && s[jj] <= tol) alpha = std::min(alpha, beta[jj] / (beta[jj] - s[jj]));
      }
      if (!std::isfinite(alpha)) break;
      if (++inner > p + 1)
        throw NnlsError("nnls: inner loop failed to restore feasibility", finalize(X, y, beta, iter));
      beta += alpha * (s - beta);
      for (std::size_t j = 0; j < p; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        if (passive[j] && beta[jj] <= tol) {
          passive[j] = false;
          beta[jj] = 0.0;
        }
      }
      s = solve_passive(X, y, passive);
    }
    beta = s;
    w = X.transpose() * (y - X * beta);
  }
  return finalize(X, y, beta, iter);
}

}  // namespace ardprof
