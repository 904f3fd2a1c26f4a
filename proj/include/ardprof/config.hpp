#pragma once

// JSON configuration. Each section overlays the matching settings struct;
// unknown keys are rejected so typos do not pass silently.
//
// {
//   "responses": "...", "profiles": "...", "margins": "...",
//   "latent": ["hidden01", ...], "out": "...", "seed": 7,
//   "sampler":  {"chains": 3, "iterations": 2000, "burn_in": 1000, "thin": 1,
//                "adapt_window": 50, "target_accept": 0.44, "target_accept_mixing": 0.23,
//                "mode": "two_stage", "mixing_proposal": "renormalize",
//                "jump_scales": {"degree": 0.5, "mixing": 0.01, "overdispersion": 0.5, "profile": 0.3}},
//   "simple":   {"mixing": "ratio", "weighting": "unweighted", "bootstrap": 200,
//                "em_max_iterations": 500, "em_tolerance": 1e-10, "scaled_down_tolerance": 1e-6},
//   "simulate": {"regime": "scaled_down", "n": 500, "known": 12, "latent": 6, "mean_degree": 750,
//                "sigma_d": 0.6, "omega": 5, "latent_log_mean": -6.2, "latent_log_sd": 0.8,
//                "known_fraction": 0.01},
//   "study":    {"reps": 100, "regimes": ["separable", ...]}
// }

#include <optional>
#include <string>
#include <vector>

#include "ardprof/estimators.hpp"
#include "ardprof/io.hpp"
#include "ardprof/mcmc.hpp"
#include "ardprof/simulator.hpp"

namespace ardprof {

struct ProjectConfig {
  std::optional<std::string> responses, profiles, margins, out;
  std::optional<std::vector<std::string>> latent;
  std::optional<std::uint64_t> seed;
  Json sampler = Json::object();
  Json simple = Json::object();
  Json simulate = Json::object();
  Json study = Json::object();
};

ProjectConfig parse_project_config(const Json& j, const std::string& source);
ProjectConfig load_project_config(const std::string& path);

void apply_sampler_json(const Json& j, SamplerConfig& config);
void apply_simple_json(const Json& j, SimpleOptions& options);
void apply_world_json(const Json& j, WorldOptions& options);

Json sampler_to_json(const SamplerConfig& config);
Json simple_to_json(const SimpleOptions& options);
Json world_to_json(const WorldOptions& options);

}  // namespace ardprof
