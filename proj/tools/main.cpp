#include <iostream>

#include "CLI11.hpp"
#include "ardprof/error.hpp"
#include "ardprof/simulator.hpp"
#include "commands.hpp"

using namespace ardprof;

namespace {

void add_world_flags(CLI::App* cmd, WorldOptions& w, std::string& regime) {
  cmd->add_option("--regime", regime, "separable, scaled_down, violating or flat")->capture_default_str();
  cmd->add_option("--n", w.respondents, "respondents")->capture_default_str();
  cmd->add_option("--known", w.known_columns, "known subpopulations K")->capture_default_str();
  cmd->add_option("--latent", w.latent_columns, "latent subpopulations H")->capture_default_str();
  cmd->add_option("--mean-degree", w.mean_degree, "mean network size")->capture_default_str();
  cmd->add_option("--sigma-d", w.sigma_d, "sd of log degree")->capture_default_str();
  cmd->add_option("--omega", w.omega, "overdispersion for every column")->capture_default_str();
}

void add_fit_inputs(CLI::App* cmd, cli::FitArgs& f) {
  cmd->add_option("--responses", f.responses, "responses CSV");
  cmd->add_option("--profiles", f.profiles, "profiles CSV (? marks latent cells)");
  cmd->add_option("--margins", f.margins, "margins CSV");
  cmd->add_option("--latent-columns", f.latent, "expected latent columns")->delimiter(',');
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--config", f.config, "JSON config; its values override flags");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent demographic profiles from aggregated relational data"};
  app.require_subcommand(1);

  cli::SimulateArgs sim;
  std::string sim_regime = "scaled_down";
  auto* simulate = app.add_subcommand("simulate", "simulate a survey and write data plus truth");
  add_world_flags(simulate, sim.world, sim_regime);
  simulate->add_option("--seed", sim.seed, "random seed");
  simulate->add_option("--out", sim.out, "output directory");
  simulate->add_option("--config", sim.config, "JSON config; its values override flags");

  auto* fit = app.add_subcommand("fit", "estimate latent profiles");
  fit->require_subcommand(1);
  cli::FitArgs mcmc;
  auto* fit_mcmc = fit->add_subcommand("mcmc", "Gibbs-Metropolis sampler");
  add_fit_inputs(fit_mcmc, mcmc);
  std::string mode = "two_stage", proposal = "renormalize";
  fit_mcmc->add_option("--chains", mcmc.sampler.chains)->capture_default_str();
  fit_mcmc->add_option("--iters", mcmc.sampler.iterations)->capture_default_str();
  fit_mcmc->add_option("--burn-in", mcmc.sampler.burn_in)->capture_default_str();
  fit_mcmc->add_option("--thin", mcmc.sampler.thin)->capture_default_str();
  fit_mcmc->add_option("--mode", mode, "two_stage or joint")->capture_default_str();
  fit_mcmc->add_option("--mixing-proposal", proposal, "renormalize or logistic")->capture_default_str();

  cli::FitArgs simple;
  auto* fit_simple = fit->add_subcommand("simple", "scale-up, ratio/EM mixing and NNLS regression");
  add_fit_inputs(fit_simple, simple);
  std::string mixing = "ratio", weighting = "unweighted";
  fit_simple->add_option("--mixing", mixing, "ratio or em")->capture_default_str();
  fit_simple->add_option("--weighting", weighting, "unweighted or degree")->capture_default_str();
  fit_simple->add_option("--bootstrap", simple.simple.bootstrap, "bootstrap resamples")->capture_default_str();

  cli::StudyArgs study;
  auto* study_cmd = app.add_subcommand("study", "replicated simulation study of the simple pipeline");
  study_cmd->add_option("--reps", study.reps)->capture_default_str();
  study_cmd->add_option("--regimes", study.regimes, "comma list or 'all'")->delimiter(',');
  study_cmd->add_option("--n", study.world.respondents)->capture_default_str();
  study_cmd->add_option("--known", study.world.known_columns)->capture_default_str();
  study_cmd->add_option("--latent", study.world.latent_columns)->capture_default_str();
  study_cmd->add_option("--seed", study.seed, "random seed");
  study_cmd->add_option("--out", study.out, "output directory");
  study_cmd->add_option("--config", study.config, "JSON config; its values override flags");

  cli::SummarizeArgs summary;
  auto* summarize = app.add_subcommand("summarize", "print latent-profile tables, optionally diff two results");
  summarize->add_option("--dir", summary.dir, "results directory")->required();
  summarize->add_option("--diff", summary.diff, "second results directory to compare against");
  summarize->add_option("--csv", summary.csv, "write the diff table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) {
      sim.world.regime = parse_regime(sim_regime);
      return cli::cmd_simulate(sim);
    }
    if (*fit_mcmc) {
      mcmc.sampler.mode = parse_mode(mode);
      mcmc.sampler.mixing_proposal = parse_mixing_proposal(proposal);
      return cli::cmd_fit_mcmc(mcmc);
    }
    if (*fit_simple) {
      if (mixing == "ratio") simple.simple.mixing = MixingMethod::ratio;
      else if (mixing == "em") simple.simple.mixing = MixingMethod::em;
      else throw InputError("--mixing must be ratio or em");
      if (weighting == "unweighted") simple.simple.weighting = EgoWeighting::unweighted;
      else if (weighting == "degree") simple.simple.weighting = EgoWeighting::degree;
      else throw InputError("--weighting must be unweighted or degree");
      return cli::cmd_fit_simple(simple);
    }
    if (*study_cmd) return cli::cmd_study(study);
    if (*summarize) return cli::cmd_summarize(summary);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 3;
  } catch (const DomainError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
