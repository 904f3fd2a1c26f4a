#pragma once

// File formats.
//
// responses.csv   respondent_id,ego_group,<subpop>...          integer counts
// profiles.csv    alter_group,<subpop>...                       h(a,k), or ? for latent cells
// margins.csv     level,name,count                              level is total|alter|subpop|cross;
//                                                               cross rows are named alter|subpop
// draws.csv       chain,iteration,<parameter>...
// degrees.csv     respondent_id,estimate
// mixing.csv      ego_group,alter_group,estimate
// latent_profiles.csv  subpop,alter_group,estimate,se,q025,q25,q50,q75,q975
//
// Every real is written in shortest round-trip form.

#include <Eigen/Dense>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ardprof/mcmc.hpp"
#include "ardprof/types.hpp"

namespace ardprof {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr double kProfileMarginTolerance = 1e-9;

ArdDataset load_responses(const std::string& path);
ProfileMatrix load_profiles(const std::string& path);
PopulationMargins load_margins(const std::string& path);

// Known profile cells must equal N_ak / N_a within `tolerance` whenever the
// margins carry the cross counts. Columns are matched by name.
void check_profile_margins(const ProfileMatrix& profile, const PopulationMargins& margins,
                           double tolerance = kProfileMarginTolerance);

struct FitInputs {
  ArdDataset data;
  ProfileMatrix profile;
  PopulationMargins margins;
};

// Loads all three files and puts profiles and margins in the responses'
// column order. Subpopulations missing from the margins must be latent.
// `latent`, when nonempty, must name exactly the `?` columns.
FitInputs load_inputs(const std::string& responses, const std::string& profiles, const std::string& margins,
                      const std::vector<std::string>& latent = {});

void write_responses(const std::string& path, const ArdDataset& data);
// Latent cells are written as ? unless `reveal_latent`.
void write_profiles(const std::string& path, const ProfileMatrix& profile, bool reveal_latent = false);
void write_margins(const std::string& path, const PopulationMargins& margins);

Json params_to_json(const ModelParams& params, const ArdDataset& data, const ProfileMatrix& profile);

void write_draws(const std::string& path, const PosteriorDraws& draws);
PosteriorDraws load_draws(const std::string& path);

void write_degrees(const std::string& path, const std::vector<std::string>& ids, const Eigen::VectorXd& estimate);
void write_mixing(const std::string& path, const std::vector<std::string>& ego_groups,
                  const std::vector<std::string>& alter_groups, const Eigen::MatrixXd& estimate);

struct LatentTable {
  std::vector<std::string> subpops;       // H latent columns
  std::vector<std::string> alter_groups;  // A
  Eigen::MatrixXd estimate;               // A x H
  Eigen::MatrixXd se;
  std::array<Eigen::MatrixXd, 5> quantiles;
};

void write_latent_profiles(const std::string& path, const LatentTable& table);
LatentTable load_latent_profiles(const std::string& path);

struct EstimateRow {
  std::string key1, key2;
  double estimate;
};
// Reads degrees.csv or mixing.csv back into (key, estimate) rows.
std::vector<EstimateRow> load_estimates(const std::string& path);

void write_json(const std::string& path, const Json& value);
Json read_json(const std::string& path);

std::string sha256_file(const std::string& path);

// manifest.json: command, version, seed, config echo and the SHA-256 of
// every listed file (paths relative to `out_dir`).
void write_manifest(const std::string& out_dir, const std::string& command, std::uint64_t seed, const Json& config,
                    const std::vector<std::string>& files);

// Creates the directory (and parents); InputError when it cannot be written.
void ensure_output_dir(const std::string& dir);

}  // namespace ardprof
