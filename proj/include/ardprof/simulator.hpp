#pragma once

// Synthetic ARD from the latent nonrandom mixing model, plus the four
// known-profile selection regimes used in the simulation study.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ardprof/rng.hpp"
#include "ardprof/types.hpp"

namespace ardprof {

enum class ProfileRegime { separable, scaled_down, violating, flat };

std::string to_string(ProfileRegime regime);
ProfileRegime parse_regime(std::string_view text);
const std::array<ProfileRegime, 4>& all_regimes();

struct RegimeOptions {
  // Sum_k N_k / N for the scaled_down, violating and flat regimes.
  double known_fraction = 0.01;
  // Alter groups are read as `gender_blocks` contiguous blocks, each ordered
  // from youngest to oldest.
  std::size_t gender_blocks = 2;
  // Fixed so that a regime is a pure function of (regime, margins, K).
  std::uint64_t seed = 0x5eed0fa11;
};

struct RegimeProfiles {
  PopulationMargins margins;  // input margins plus N_k and N_ak for the K known columns
  ProfileMatrix profile;      // h(a,k) = N_ak / N_a, all columns known
};

// Throws InputError when the regime cannot be built exactly from the given
// margins (e.g. N_a * known_fraction not integral, or K < A for separable).
RegimeProfiles make_regime_profiles(ProfileRegime regime, const PopulationMargins& base, std::size_t known_columns,
                                    const RegimeOptions& options = {});

// Latent truth: log h(a,k) iid Normal(log_mean, log_sd^2), A x H.
Eigen::MatrixXd draw_latent_profiles(Rng& rng, std::size_t alter_groups, std::size_t columns, double log_mean,
                                     double log_sd);

// Stand-in population: 8 age-by-gender alter groups, N = 3e8.
PopulationMargins default_population();
std::vector<std::string> default_ego_groups();
// Homophilous 6 x 8 stand-in mixing matrix (ego age/gender vs alter age/gender).
MixingMatrix default_mixing(const PopulationMargins& population);

struct SimConfig {
  std::size_t respondents = 500;
  std::vector<std::string> ego_group_names;
  std::vector<double> ego_group_probs;
  MixingMatrix true_mixing;
  ProfileMatrix true_profile;  // every entry filled in; latent flags mark the hidden columns
  PopulationMargins margins;   // published margins; latent columns carry no N_k / N_ak
  double mu_d = 0.0;
  double sigma_d = 0.6;
  std::vector<double> overdispersion;
  std::uint64_t seed = 0;
  ProfileRegime regime = ProfileRegime::scaled_down;
  double latent_log_mean = 0.0;
  double latent_log_sd = 1.0;

  void validate() const;
};

struct WorldOptions {
  ProfileRegime regime = ProfileRegime::scaled_down;
  std::size_t respondents = 500;
  std::size_t known_columns = 12;
  std::size_t latent_columns = 6;
  double mean_degree = 750.0;
  double sigma_d = 0.6;
  double omega = 5.0;
  double latent_log_mean = -6.2146080984221914;  // log(0.002)
  double latent_log_sd = 0.8;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> latent_seed;  // defaults to seed
  RegimeOptions regime_options;
};

SimConfig make_sim_config(const WorldOptions& options);

struct SimResult {
  ArdDataset dataset;
  ModelParams truth;
  ProfileMatrix profile;  // observed profile: latent values hidden
  PopulationMargins margins;
};

SimResult simulate(const SimConfig& config);

}  // namespace ardprof
