#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "ardprof/config.hpp"
#include "ardprof/csv.hpp"
#include "ardprof/diagnostics.hpp"
#include "ardprof/error.hpp"
#include "ardprof/identifiability.hpp"
#include "ardprof/io.hpp"
#include "ardprof/study.hpp"

namespace ardprof::cli {

namespace fs = std::filesystem;

namespace {

std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed) {
  if (!seed) throw InputError("--seed is required (or a \"seed\" entry in --config)");
  return *seed;
}

void require_out(const std::string& out) {
  if (out.empty()) throw InputError("--out is required");
  ensure_output_dir(out);
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

void print_scaled_down(const ScaledDownReport& r, const std::vector<std::string>& alters) {
  std::cout << "scaled-down check: sum N_k / N = " << fmt(r.target, 6) << ", max |deviation| = "
            << fmt(r.max_abs_deviation, 3) << " (" << (r.pass ? "pass" : "FAIL") << " at " << fmt(r.tolerance, 3)
            << ")\n";
  for (std::size_t a = 0; a < alters.size(); ++a)
    std::cout << "  " << std::left << std::setw(12) << alters[a] << std::right << std::setw(12) << fmt(r.deviation[a], 3)
              << "\n";
}

void warn_rank(const RankReport& rank) {
  if (rank.deficient) std::cout << "warning: known profiles are not identifiable: " << rank.describe() << "\n";
}

void apply_fit_config(FitArgs& a) {
  if (a.config.empty()) return;
  const auto c = load_project_config(a.config);
  if (c.responses) a.responses = *c.responses;
  if (c.profiles) a.profiles = *c.profiles;
  if (c.margins) a.margins = *c.margins;
  if (c.out) a.out = *c.out;
  if (c.latent) a.latent = *c.latent;
  if (c.seed) a.seed = c.seed;
  apply_sampler_json(c.sampler, a.sampler);
  apply_simple_json(c.simple, a.simple);
}

FitInputs load_fit_inputs(const FitArgs& a) {
  for (const auto& [flag, path] : {std::pair{"--responses", a.responses}, {"--profiles", a.profiles}, {"--margins", a.margins}})
    if (path.empty()) throw InputError(std::string(flag) + " is required");
  return load_inputs(a.responses, a.profiles, a.margins, a.latent);
}

Json inputs_json(const FitArgs& a) {
  return {{"responses", a.responses}, {"profiles", a.profiles}, {"margins", a.margins}, {"latent", a.latent}};
}

std::vector<std::string> latent_names(const ProfileMatrix& p) {
  std::vector<std::string> out;
  for (auto k : p.latent_columns()) out.push_back(p.subpop_names()[k]);
  return out;
}

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

int cmd_simulate(SimulateArgs a) {
  if (!a.config.empty()) {
    const auto c = load_project_config(a.config);
    apply_world_json(c.simulate, a.world);
    if (c.seed) a.seed = c.seed;
    if (c.out) a.out = *c.out;
  }
  a.world.seed = require_seed(a.seed);
  if (a.world.respondents < 1) throw InputError("--n must be at least 1");
  require_out(a.out);

  const SimConfig config = make_sim_config(a.world);
  const SimResult sim = simulate(config);

  write_responses(join(a.out, "responses.csv"), sim.dataset);
  write_profiles(join(a.out, "profiles.csv"), sim.profile);
  write_profiles(join(a.out, "true_profiles.csv"), config.true_profile, true);
  write_margins(join(a.out, "margins.csv"), sim.margins);
  Json truth = params_to_json(sim.truth, sim.dataset, sim.profile);
  truth["regime"] = to_string(config.regime);
  write_json(join(a.out, "truth.json"), truth);
  write_manifest(a.out, "simulate", *a.seed, world_to_json(a.world),
                 {"responses.csv", "profiles.csv", "true_profiles.csv", "margins.csv", "truth.json"});

  const auto rank = validate_identifiability(sim.profile);
  const auto known = sim.profile.known_columns();
  double mean_degree = 0.0;
  for (std::size_t i = 0; i < sim.dataset.num_respondents(); ++i) mean_degree += sim.truth.degree(i);
  mean_degree /= static_cast<double>(sim.dataset.num_respondents());

  std::cout << "simulated " << sim.dataset.num_respondents() << " respondents, regime " << to_string(config.regime)
            << ", seed " << *a.seed << "\n";
  std::cout << "known columns " << known.size() << ", latent columns " << sim.profile.latent_columns().size()
            << ", known-profile rank " << rank.rank << "/" << rank.alter_groups << ", condition "
            << fmt(rank.condition_number) << "\n";
  std::cout << "mean true degree " << fmt(mean_degree, 6) << "\n";
  std::cout << std::left << std::setw(14) << "subpop" << std::right << std::setw(10) << "mean y" << std::setw(10)
            << "var/mean" << "\n";
  for (std::size_t k = 0; k < sim.dataset.num_subpops(); ++k) {
    const Eigen::VectorXd col = sim.dataset.counts().col(static_cast<Eigen::Index>(k)).cast<double>();
    const double m = col.mean();
    const double v = sim.dataset.num_respondents() > 1
                         ? (col.array() - m).square().sum() / static_cast<double>(col.size() - 1)
                         : 0.0;
    std::cout << std::left << std::setw(14) << sim.dataset.subpop_names()[k] << std::right << std::setw(10) << fmt(m)
              << std::setw(10) << (m > 0 ? fmt(v / m) : "-") << "\n";
  }
  warn_rank(rank);
  return 0;
}

int cmd_fit_mcmc(FitArgs a) {
  apply_fit_config(a);
  a.sampler.seed = require_seed(a.seed);
  a.sampler.validate();
  require_out(a.out);
  const FitInputs in = load_fit_inputs(a);
  const auto known = in.profile.known_columns();
  print_scaled_down(check_scaled_down(in.margins, known), in.profile.alter_group_names());

  const McmcResult res = run(a.sampler, in.data, in.profile, in.margins);
  const auto& draws = res.draws;
  const auto n = in.data.num_respondents();
  const auto E = in.data.num_ego_groups();
  const auto A = in.profile.num_alter_groups();

  auto column_mean = [&](const std::string& name, bool exponentiate) {
    auto v = draws.pooled(*draws.index(name));
    if (exponentiate)
      for (auto& x : v) x = std::exp(x);
    return mean(v);
  };
  Eigen::VectorXd degrees(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    degrees[static_cast<Eigen::Index>(i)] = column_mean("log_d." + in.data.respondent_ids()[i], true);
  Eigen::MatrixXd mixing(static_cast<Eigen::Index>(E), static_cast<Eigen::Index>(A));
  for (std::size_t e = 0; e < E; ++e)
    for (std::size_t a2 = 0; a2 < A; ++a2)
      mixing(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(a2)) =
          column_mean("m." + in.data.ego_group_names()[e] + "." + in.profile.alter_group_names()[a2], false);

  LatentTable table;
  table.subpops = latent_names(in.profile);
  table.alter_groups = in.profile.alter_group_names();
  const auto H = static_cast<Eigen::Index>(table.subpops.size());
  table.estimate.resize(static_cast<Eigen::Index>(A), H);
  table.se.resize(static_cast<Eigen::Index>(A), H);
  for (auto& q : table.quantiles) q.resize(static_cast<Eigen::Index>(A), H);
  for (Eigen::Index j = 0; j < H; ++j)
    for (std::size_t a2 = 0; a2 < A; ++a2) {
      const auto idx = *draws.index("h." + table.alter_groups[a2] + "." + table.subpops[static_cast<std::size_t>(j)]);
      const auto& s = res.summary[idx];
      const auto aa = static_cast<Eigen::Index>(a2);
      table.estimate(aa, j) = s.mean;
      table.se(aa, j) = s.sd;
      for (std::size_t q = 0; q < 5; ++q) table.quantiles[q](aa, j) = s.quantiles[q];
    }

  Json diag;
  std::size_t below = 0, counted = 0;
  double worst = 1.0;
  Json params = Json::object();
  for (const auto& s : res.summary) {
    params[s.name] = {{"rhat", s.rhat}, {"ess", s.ess}, {"mean", s.mean}, {"sd", s.sd}};
    if (std::isfinite(s.rhat)) {
      ++counted;
      below += s.rhat < 1.1 ? 1 : 0;
      worst = std::max(worst, s.rhat);
    }
  }
  Json acceptance = Json::array();
  for (const auto& ledger : draws.acceptance) {
    Json chain = Json::object();
    for (std::size_t b = 0; b < kBlockCount; ++b)
      if (ledger[b].proposed) chain[block_name(b)] = ledger[b].rate();
    acceptance.push_back(chain);
  }
  const double frac = counted ? static_cast<double>(below) / static_cast<double>(counted) : nan_value();
  diag["seed"] = *a.seed;
  diag["config"] = sampler_to_json(a.sampler);
  diag["rank"] = {{"rank", res.rank.rank}, {"alter_groups", res.rank.alter_groups}, {"condition", res.rank.condition_number}};
  diag["rhat_below_1_1"] = frac;
  diag["rhat_max"] = worst;
  diag["acceptance"] = acceptance;
  diag["parameters"] = params;

  write_draws(join(a.out, "draws.csv"), draws);
  write_degrees(join(a.out, "degrees.csv"), in.data.respondent_ids(), degrees);
  write_mixing(join(a.out, "mixing.csv"), in.data.ego_group_names(), in.profile.alter_group_names(), mixing);
  write_latent_profiles(join(a.out, "latent_profiles.csv"), table);
  write_json(join(a.out, "diagnostics.json"), diag);
  Json cfg = inputs_json(a);
  cfg["sampler"] = sampler_to_json(a.sampler);
  write_manifest(a.out, "fit mcmc", *a.seed, cfg,
                 {"draws.csv", "degrees.csv", "mixing.csv", "latent_profiles.csv", "diagnostics.json"});

  std::cout << "mcmc: " << a.sampler.chains << " chains x " << a.sampler.iterations << " iterations (burn-in "
            << a.sampler.burn_in << ", thin " << a.sampler.thin << ", " << to_string(a.sampler.mode) << ")\n";
  std::cout << "R-hat < 1.1 for " << below << " of " << counted << " parameters (" << fmt(100.0 * frac, 3)
            << "%), max R-hat " << fmt(worst) << "\n";
  for (std::size_t c = 0; c < draws.acceptance.size(); ++c) {
    std::cout << "chain " << c + 1 << " acceptance:";
    for (std::size_t b = 0; b < kBlockCount; ++b)
      if (draws.acceptance[c][b].proposed) std::cout << " " << block_name(b) << "=" << fmt(draws.acceptance[c][b].rate(), 3);
    std::cout << "\n";
  }
  return 0;
}

int cmd_fit_simple(FitArgs a) {
  apply_fit_config(a);
  a.simple.seed = require_seed(a.seed);
  require_out(a.out);
  const FitInputs in = load_fit_inputs(a);
  const auto known = in.profile.known_columns();
  print_scaled_down(check_scaled_down(in.margins, known, a.simple.scaled_down_tolerance), in.profile.alter_group_names());

  const SimpleFit fit = fit_simple(in.data, in.profile, in.margins, a.simple);

  LatentTable table;
  table.subpops = latent_names(in.profile);
  table.alter_groups = in.profile.alter_group_names();
  table.estimate = fit.latent.profile;
  table.se = fit.latent_se;
  table.quantiles = fit.latent_quantiles;

  Json diag;
  diag["seed"] = *a.seed;
  diag["config"] = simple_to_json(a.simple);
  diag["rank"] = {{"rank", fit.rank.rank}, {"alter_groups", fit.rank.alter_groups}, {"condition", fit.rank.condition_number}};
  diag["scaled_down"] = {{"target", fit.scaled_down.target},
                         {"max_abs_deviation", fit.scaled_down.max_abs_deviation},
                         {"pass", fit.scaled_down.pass},
                         {"deviation", fit.scaled_down.deviation}};
  diag["zero_response_rows"] = fit.individual.zero_rows;
  diag["regression_rows"] = fit.latent.rows_used.size();
  diag["design_condition"] = fit.latent.design_condition;
  diag["warnings"] = fit.latent.warnings;

  const auto& ids = in.data.respondent_ids();
  write_degrees(join(a.out, "degrees.csv"), ids, fit.degrees);
  write_mixing(join(a.out, "mixing.csv"), in.data.ego_group_names(), in.profile.alter_group_names(), fit.ego_mixing);
  write_mixing(join(a.out, "individual_mixing.csv"), ids, in.profile.alter_group_names(), fit.individual.estimates);
  write_latent_profiles(join(a.out, "latent_profiles.csv"), table);
  write_json(join(a.out, "diagnostics.json"), diag);
  Json cfg = inputs_json(a);
  cfg["simple"] = simple_to_json(a.simple);
  write_manifest(a.out, "fit simple", *a.seed, cfg,
                 {"degrees.csv", "mixing.csv", "individual_mixing.csv", "latent_profiles.csv", "diagnostics.json"});

  std::cout << "simple pipeline: " << fit.latent.rows_used.size() << " respondents in the regression, "
            << fit.individual.zero_rows << " with no known-column ties\n";
  std::cout << "design condition number " << fmt(fit.latent.design_condition) << "\n";
  for (const auto& w : fit.latent.warnings) std::cout << "warning: " << w << "\n";
  return 0;
}

int cmd_study(StudyArgs a) {
  if (!a.config.empty()) {
    const auto c = load_project_config(a.config);
    apply_world_json(c.simulate, a.world);
    if (c.seed) a.seed = c.seed;
    if (c.out) a.out = *c.out;
    if (c.study.contains("reps")) a.reps = c.study.at("reps").get<std::size_t>();
    if (c.study.contains("regimes")) a.regimes = c.study.at("regimes").get<std::vector<std::string>>();
  }
  StudyOptions opts;
  opts.seed = require_seed(a.seed);
  opts.replicates = a.reps;
  if (a.reps < 1) throw InputError("--reps must be at least 1");
  opts.world = a.world;
  opts.regimes.clear();
  for (const auto& r : a.regimes) {
    if (r == "all") {
      opts.regimes.assign(all_regimes().begin(), all_regimes().end());
      continue;
    }
    opts.regimes.push_back(parse_regime(r));
  }
  require_out(a.out);

  const StudyResult res = run_study(opts);
  write_study_rows(join(a.out, "study_errors.csv"), res.rows);
  write_study_summary(join(a.out, "study_summary.csv"), res.summary);
  Json cfg = world_to_json(a.world);
  cfg["reps"] = a.reps;
  cfg["regimes"] = a.regimes;
  write_manifest(a.out, "study", opts.seed, cfg, {"study_errors.csv", "study_summary.csv"});

  std::cout << "study: " << a.reps << " replicates x " << opts.regimes.size() << " regimes, n = "
            << a.world.respondents << "\n";
  std::cout << std::left << std::setw(13) << "regime" << std::setw(16) << "target" << std::right << std::setw(12)
            << "q25" << std::setw(12) << "median" << std::setw(12) << "q75" << "\n";
  for (const auto& s : res.summary)
    std::cout << std::left << std::setw(13) << to_string(s.regime) << std::setw(16) << s.target << std::right
              << std::setw(12) << fmt(s.q25) << std::setw(12) << fmt(s.median) << std::setw(12) << fmt(s.q75) << "\n";
  return 0;
}

namespace {

// Point estimate a results directory stands behind: posterior medians for
// MCMC output, the regression estimate for the simple pipeline.
Eigen::MatrixXd point_estimate(const std::string& dir, const LatentTable& t) {
  const auto manifest = join(dir, "manifest.json");
  if (fs::exists(manifest)) {
    const Json m = read_json(manifest);
    if (m.value("command", "") == "fit mcmc") return t.quantiles[2];
  }
  return t.estimate;
}

LatentTable load_results(const std::string& dir) {
  if (dir.empty()) throw InputError("--dir is required");
  if (!fs::is_directory(dir)) throw InputError("results directory '" + dir + "' does not exist");
  const auto path = join(dir, "latent_profiles.csv");
  if (!fs::exists(path)) throw InputError("'" + dir + "' has no latent_profiles.csv; not a fit output directory");
  return load_latent_profiles(path);
}

}  // namespace

int cmd_summarize(const SummarizeArgs& a) {
  const LatentTable t = load_results(a.dir);
  for (std::size_t j = 0; j < t.subpops.size(); ++j) {
    std::cout << "latent profile: " << t.subpops[j] << "\n";
    std::cout << std::left << std::setw(12) << "alter_group" << std::right;
    for (const char* h : {"estimate", "se", "q025", "q25", "q50", "q75", "q975"}) std::cout << std::setw(12) << h;
    std::cout << "\n";
    for (std::size_t a2 = 0; a2 < t.alter_groups.size(); ++a2) {
      const auto aa = static_cast<Eigen::Index>(a2), jj = static_cast<Eigen::Index>(j);
      std::cout << std::left << std::setw(12) << t.alter_groups[a2] << std::right << std::setw(12)
                << fmt(t.estimate(aa, jj)) << std::setw(12) << fmt(t.se(aa, jj));
      for (const auto& q : t.quantiles) std::cout << std::setw(12) << fmt(q(aa, jj));
      std::cout << "\n";
    }
    std::cout << "\n";
  }
  if (a.diff.empty()) return 0;

  const LatentTable other = load_results(a.diff);
  if (other.subpops != t.subpops || other.alter_groups != t.alter_groups)
    throw InputError("cannot diff: the two results cover different latent columns or alter groups");
  const Eigen::MatrixXd lhs = point_estimate(a.dir, t);
  const Eigen::MatrixXd rhs = point_estimate(a.diff, other);
  std::cout << "difference (" << a.dir << " vs " << a.diff << ")\n";
  std::cout << std::left << std::setw(14) << "subpop" << std::setw(12) << "alter_group" << std::right << std::setw(12)
            << "left" << std::setw(12) << "right" << std::setw(12) << "|diff|" << "\n";
  std::vector<std::vector<std::string>> rows;
  for (std::size_t j = 0; j < t.subpops.size(); ++j)
    for (std::size_t a2 = 0; a2 < t.alter_groups.size(); ++a2) {
      const auto aa = static_cast<Eigen::Index>(a2), jj = static_cast<Eigen::Index>(j);
      const double d = std::abs(lhs(aa, jj) - rhs(aa, jj));
      std::cout << std::left << std::setw(14) << t.subpops[j] << std::setw(12) << t.alter_groups[a2] << std::right
                << std::setw(12) << fmt(lhs(aa, jj)) << std::setw(12) << fmt(rhs(aa, jj)) << std::setw(12) << fmt(d)
                << "\n";
      rows.push_back({t.subpops[j], t.alter_groups[a2], format_double(lhs(aa, jj)), format_double(rhs(aa, jj)),
                      format_double(d)});
    }
  if (!a.csv.empty()) {
    std::ofstream out(a.csv, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + a.csv + "'");
    write_csv_row(out, {"subpop", "alter_group", "left", "right", "abs_diff"});
    for (const auto& r : rows) write_csv_row(out, r);
  }
  return 0;
}

}  // namespace ardprof::cli
