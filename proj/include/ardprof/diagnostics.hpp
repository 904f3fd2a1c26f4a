#pragma once

#include <span>
#include <vector>

namespace ardprof {

// Linear-interpolation quantile (R type 7) of already sorted values.
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::vector<double> values, double p);

double mean(std::span<const double> values);
// Sample standard deviation (n - 1 denominator).
double sample_sd(std::span<const double> values);

// Split-chain potential scale reduction. Each inner vector is one chain; all
// chains must have the same length >= 4. Returns 1 for a constant parameter.
double split_rhat(const std::vector<std::vector<double>>& chains);

// Multi-chain effective sample size (variogram autocorrelation, Geyer's
// initial positive sequence truncation) on split chains.
double effective_sample_size(const std::vector<std::vector<double>>& chains);

}  // namespace ardprof
