#include "ardprof/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ardprof {

namespace {

std::vector<std::vector<double>> split_halves(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw std::invalid_argument("diagnostics need at least one chain");
  const std::size_t n = chains.front().size();
  for (const auto& c : chains)
    if (c.size() != n) throw std::invalid_argument("all chains must have the same length");
  if (n < 4) throw std::invalid_argument("diagnostics need at least 4 draws per chain");
  const std::size_t half = n / 2;
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) {
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

struct Variances {
  double within = 0.0;
  double var_plus = 0.0;
};

Variances chain_variances(const std::vector<std::vector<double>>& split) {
  const double m = static_cast<double>(split.size());
  const double n = static_cast<double>(split.front().size());
  std::vector<double> means;
  double within = 0.0;
  for (const auto& c : split) {
    means.push_back(mean(c));
    const double s = sample_sd(c);
    within += s * s;
  }
  within /= m;
  const double grand = mean(means);
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= n / (m - 1.0);
  return {within, (n - 1.0) / n * within + between / n};
}

}  // namespace

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

double mean(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mu = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  const auto split = split_halves(chains);
  const auto v = chain_variances(split);
  if (v.within <= 0.0) return v.var_plus <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(v.var_plus / v.within);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  const auto split = split_halves(chains);
  const std::size_t m = split.size();
  const std::size_t n = split.front().size();
  const double total = static_cast<double>(m * n);
  const auto v = chain_variances(split);
  if (v.var_plus <= 0.0) return total;

  auto rho = [&](std::size_t lag) {
    double vario = 0.0;
    for (const auto& c : split)
      for (std::size_t t = lag; t < n; ++t) vario += (c[t] - c[t - lag]) * (c[t] - c[t - lag]);
    vario /= static_cast<double>(m * (n - lag));
    return 1.0 - vario / (2.0 * v.var_plus);
  };

  // Sum autocorrelations in adjacent pairs while the pair sums stay positive.
  double sum = 0.0;
  for (std::size_t t = 1; t + 1 < n; t += 2) {
    const double pair = rho(t) + rho(t + 1);
    if (pair < 0.0) break;
    sum += pair;
  }
  const double tau = 1.0 + 2.0 * sum;
  return std::min(total / tau, total * std::log10(total));
}

}  // namespace ardprof
