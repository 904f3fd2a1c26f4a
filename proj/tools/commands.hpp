#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ardprof/estimators.hpp"
#include "ardprof/mcmc.hpp"
#include "ardprof/simulator.hpp"

namespace ardprof::cli {

struct SimulateArgs {
  WorldOptions world;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string config;
};

struct FitArgs {
  std::string responses, profiles, margins, out, config;
  std::vector<std::string> latent;
  std::optional<std::uint64_t> seed;
  SamplerConfig sampler;
  SimpleOptions simple;
};

struct StudyArgs {
  std::size_t reps = 100;
  std::vector<std::string> regimes{"all"};
  WorldOptions world;
  std::optional<std::uint64_t> seed;
  std::string out, config;
};

struct SummarizeArgs {
  std::string dir;
  std::string diff;
  std::string csv;  // optional diff output
};

int cmd_simulate(SimulateArgs args);
int cmd_fit_mcmc(FitArgs args);
int cmd_fit_simple(FitArgs args);
int cmd_study(StudyArgs args);
int cmd_summarize(const SummarizeArgs& args);

}  // namespace ardprof::cli
