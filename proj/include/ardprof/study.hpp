#pragma once

// Replicated simulation study: for every regime and replicate, simulate a
// survey, run the simple pipeline and score it against the truth.

#include <cstdint>
#include <string>
#include <vector>

#include "ardprof/estimators.hpp"
#include "ardprof/simulator.hpp"

namespace ardprof {

struct StudyOptions {
  std::vector<ProfileRegime> regimes{all_regimes().begin(), all_regimes().end()};
  std::size_t replicates = 100;
  WorldOptions world;     // regime and seeds are set per cell
  SimpleOptions simple;   // bootstrap is ignored; only point estimates are scored
  std::uint64_t seed = 0;
  std::size_t workers = 0;
};

inline constexpr const char* kMixingTarget = "mixing";
inline constexpr const char* kLatentTarget = "latent_profile";

struct StudyRow {
  ProfileRegime regime;
  std::size_t replicate;  // 1-based
  std::string target;
  double error;           // total squared error over all cells
};

struct StudySummary {
  ProfileRegime regime;
  std::string target;
  std::size_t count = 0;
  double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::vector<StudySummary> summary;
};

// Replicate r uses the same survey seed and the same latent truth under every
// regime, so regimes are compared on paired draws. The truth is redrawn per
// replicate unless world.latent_seed pins it.
std::uint64_t replicate_seed(std::uint64_t seed, std::size_t replicate);

StudyResult run_study(const StudyOptions& options);
std::vector<StudySummary> summarize_study(const std::vector<StudyRow>& rows);
const StudySummary& find_summary(const std::vector<StudySummary>& summary, ProfileRegime regime,
                                 const std::string& target);

void write_study_rows(const std::string& path, const std::vector<StudyRow>& rows);
void write_study_summary(const std::string& path, const std::vector<StudySummary>& summary);

}  // namespace ardprof
