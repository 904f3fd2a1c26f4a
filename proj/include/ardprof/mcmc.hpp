#pragma once

// Gibbs-Metropolis sampler for the latent nonrandom mixing model with latent
// demographic profiles.
//
// One sweep runs, in order:
//   (1) Metropolis on each log d_i
//   (2) Metropolis on each mixing row m(e, .)
//   (3)-(6) Gibbs draws of mu_d, sigma_d^2, mu_m(e), sigma_m(e)^2
//   (7) Metropolis on omega'_k for known columns
//   (8) Metropolis on each latent log h(a,k)
//   (9)-(10) Gibbs draws of mu_h, sigma_h^2
//   (11) Metropolis on omega'_k for latent columns
// In two-stage mode steps (1)-(7) run on the known columns first; steps
// (8)-(11) then run with d, m and the known omega' frozen at the stage-one
// posterior means.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ardprof/identifiability.hpp"
#include "ardprof/kernels.hpp"
#include "ardprof/rng.hpp"
#include "ardprof/types.hpp"

namespace ardprof {

enum class EstimationMode { two_stage, joint };
enum class MixingProposal { renormalize, logistic };
enum class ColumnScope { all, known, latent };

std::string to_string(EstimationMode mode);
EstimationMode parse_mode(const std::string& text);
std::string to_string(MixingProposal proposal);
MixingProposal parse_mixing_proposal(const std::string& text);

struct JumpScales {
  double degree = 0.5;          // on log d
  double mixing = 0.01;         // per entry of m(e, .), or on log m for the logistic proposal
  double overdispersion = 0.5;  // on omega'
  double profile = 0.3;         // on log h
};

struct SamplerConfig {
  std::size_t chains = 3;
  std::size_t iterations = 2000;
  std::size_t burn_in = 1000;
  std::size_t thin = 1;
  JumpScales jump_scales;
  std::size_t adapt_window = 50;
  double target_accept = 0.44;         // scalar Metropolis blocks
  double target_accept_mixing = 0.23;  // A-dimensional mixing rows
  std::uint64_t seed = 0;
  EstimationMode mode = EstimationMode::two_stage;
  MixingProposal mixing_proposal = MixingProposal::renormalize;
  bool use_likelihood = true;          // false samples the prior
  bool update_hyperparameters = true;
  std::size_t workers = 0;             // 0: hardware concurrency

  void validate() const;
};

enum Block : std::size_t { kDegreeBlock = 0, kMixingBlock, kOverdispersionBlock, kProfileBlock, kBlockCount };
const char* block_name(std::size_t block);

struct AcceptanceCounter {
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;
  double rate() const { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
  void record(bool ok) {
    ++proposed;
    accepted += ok ? 1 : 0;
  }
};

using AcceptanceLedger = std::array<AcceptanceCounter, kBlockCount>;

struct LogPosteriorTerms {
  double likelihood = 0.0;
  double degree_prior = 0.0;
  double mixing_prior = 0.0;
  double overdispersion_prior = 0.0;  // -2 log omega' per column (inverse-uniform prior)
  double profile_prior = 0.0;         // normal on log h for latent entries
  double total() const {
    return likelihood + degree_prior + mixing_prior + overdispersion_prior + profile_prior;
  }
};

// Unnormalized log posterior. `known` covers the likelihood of known columns
// plus the degree and mixing priors; `latent` the likelihood of latent
// columns plus the latent-profile prior. Out-of-domain parameters give -inf.
LogPosteriorTerms log_posterior_terms(const ModelParams& params, const ArdDataset& data, const ProfileMatrix& profile,
                                      ColumnScope scope = ColumnScope::all, bool use_likelihood = true);
double log_posterior(const ModelParams& params, const ArdDataset& data, const ProfileMatrix& profile,
                     ColumnScope scope = ColumnScope::all);

// Hyperparameter conditionals:
//   mean:     Normal(mean(x), sigma^2 / n)
//   variance: Inv-chi^2(n - 1, (1/n) sum (x - mu)^2), nullopt when n < 2.
double gibbs_mean_draw(Rng& rng, std::span<const double> x, double sigma);
std::optional<double> gibbs_variance_draw(Rng& rng, std::span<const double> x, double mu);

struct ChainState {
  ModelParams params;
  Eigen::MatrixXd h_full;  // A x K, known columns plus current latent values
  Eigen::MatrixXd inner;   // E x K, sum_a m(e,a) h(a,k)
  Eigen::MatrixXd cell;    // n x K, cached NB log mass (without log y!) for active columns
  std::vector<NegBinShape> shapes;
  std::vector<double> scratch;

  Eigen::VectorXd degree_scale;
  Eigen::VectorXd mixing_scale;
  Eigen::VectorXd omega_scale;
  Eigen::MatrixXd profile_scale;  // A x H

  // Per-parameter counts since the last adaptation.
  std::vector<AcceptanceCounter> degree_window, mixing_window, omega_window, profile_window;
  AcceptanceLedger ledger;  // counts after burn-in
  bool counting = false;

  ColumnScope scope = ColumnScope::all;
  Rng rng;
};

class GibbsMetropolis {
 public:
  GibbsMetropolis(const ArdDataset& data, const ProfileMatrix& profile, SamplerConfig config);

  // Scale-up degrees, random mixing, omega' = 5, latent h at the mean of the
  // known entries. Chains after the first start from jittered values.
  ChainState initial_state(const PopulationMargins& margins, std::size_t chain) const;
  ChainState make_state(ModelParams params, Rng rng) const;

  bool step_degree(ChainState& s, std::size_t i) const;
  bool step_mixing_row(ChainState& s, std::size_t e) const;
  bool step_overdispersion(ChainState& s, std::size_t k) const;
  // `j` indexes the latent columns.
  bool step_latent_profile(ChainState& s, std::size_t a, std::size_t j) const;
  // Steps (3)-(6) and/or (9)-(10) depending on the state's scope.
  void step_hyperparams(ChainState& s) const;
  void step_degree_mixing_hyper(ChainState& s) const;
  void step_profile_hyper(ChainState& s) const;

  // One full sweep for the state's scope.
  void sweep(ChainState& s) const;
  // Adapts every proposal scale from its window counts, then clears them.
  void adapt(ChainState& s) const;
  void refresh(ChainState& s) const;

  const std::vector<std::string>& parameter_names() const { return names_; }
  void flatten(const ChainState& s, std::span<double> row, ColumnScope part) const;
  bool is_stage_two_parameter(std::size_t index) const;

  const SamplerConfig& config() const { return config_; }
  const std::vector<std::size_t>& active_columns(ColumnScope scope) const;

 private:
  double column_delta(const ChainState& s, std::size_t k, const Eigen::VectorXd& inner_new) const;

  const ArdDataset& data_;
  const ProfileMatrix& profile_;
  SamplerConfig config_;
  std::vector<std::size_t> known_, latent_, all_;
  std::vector<std::vector<std::size_t>> members_;  // respondents per ego group
  std::vector<std::string> names_;
  std::size_t off_m_ = 0, off_omega_ = 0, off_h_ = 0, off_hyper_ = 0;
};

struct PosteriorDraws {
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> chains;                 // retained iterations x parameters
  std::vector<std::vector<std::size_t>> iterations;    // iteration number of each retained row
  std::vector<AcceptanceLedger> acceptance;            // per chain

  std::optional<std::size_t> index(const std::string& name) const;
  std::vector<double> pooled(std::size_t param) const;
  std::vector<std::vector<double>> per_chain(std::size_t param) const;
};

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  std::array<double, 5> quantiles{};  // 2.5, 25, 50, 75, 97.5 %
  double rhat = 1.0;
  double ess = 0.0;
};

std::vector<ParameterSummary> summarize_draws(const PosteriorDraws& draws);

struct McmcResult {
  PosteriorDraws draws;
  std::vector<ParameterSummary> summary;
  SamplerConfig config;
  RankReport rank;
  std::vector<std::string> known_columns;
  std::vector<std::string> latent_columns;
};

// Runs every chain (in parallel) and computes diagnostics. `init`, when
// given, is the starting point of every chain instead of the default.
McmcResult run(const SamplerConfig& config, const ArdDataset& data, const ProfileMatrix& profile,
               const PopulationMargins& margins, const ModelParams* init = nullptr);

}  // namespace ardprof
