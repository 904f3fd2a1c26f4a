#include "ardprof/study.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ardprof/csv.hpp"
#include "ardprof/diagnostics.hpp"
#include "ardprof/error.hpp"
#include "ardprof/parallel.hpp"

namespace ardprof {

namespace {

double squared_error(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
  double sum = 0.0;
  for (Eigen::Index r = 0; r < truth.rows(); ++r)
    for (Eigen::Index c = 0; c < truth.cols(); ++c) {
      // An empty ego group has no estimate and is scored as zero.
      const double e = std::isfinite(estimate(r, c)) ? estimate(r, c) : 0.0;
      sum += (e - truth(r, c)) * (e - truth(r, c));
    }
  return sum;
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t replicate) {
  Rng rng = make_stream(seed, 0x57d7000000000000ull + replicate);
  return rng();
}

StudyResult run_study(const StudyOptions& options) {
  if (options.replicates < 1) throw InputError("study: at least one replicate is required");
  if (options.regimes.empty()) throw InputError("study: no regimes selected");
  const std::size_t G = options.regimes.size();
  const std::size_t cells = G * options.replicates;
  std::vector<std::array<double, 2>> errors(cells);

  parallel_for(cells, worker_count(options.workers), [&](std::size_t idx) {
    const std::size_t g = idx % G;
    const std::size_t r = idx / G;
    WorldOptions world = options.world;
    world.regime = options.regimes[g];
    world.seed = replicate_seed(options.seed, r);
    // Latent truth follows the replicate unless a fixed latent_seed was given.
    world.latent_seed = options.world.latent_seed;
    const SimResult sim = simulate(make_sim_config(world));

    SimpleOptions simple = options.simple;
    simple.bootstrap = 0;
    simple.require_identifiable = false;
    const SimpleFit fit = fit_simple(sim.dataset, sim.profile, sim.margins, simple);
    errors[idx][0] = squared_error(fit.ego_mixing, sim.truth.mixing.values());
    errors[idx][1] = squared_error(fit.latent.profile, sim.truth.latent_profile);
  });

  StudyResult out;
  for (std::size_t g = 0; g < G; ++g)
    for (std::size_t r = 0; r < options.replicates; ++r) {
      const auto& e = errors[r * G + g];
      out.rows.push_back({options.regimes[g], r + 1, kMixingTarget, e[0]});
      out.rows.push_back({options.regimes[g], r + 1, kLatentTarget, e[1]});
    }
  out.summary = summarize_study(out.rows);
  return out;
}

std::vector<StudySummary> summarize_study(const std::vector<StudyRow>& rows) {
  std::vector<StudySummary> out;
  std::vector<std::vector<double>> values;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const StudySummary& s) { return s.regime == row.regime && s.target == row.target; });
    if (it == out.end()) {
      out.push_back({row.regime, row.target});
      values.emplace_back();
      it = out.end() - 1;
    }
    values[static_cast<std::size_t>(it - out.begin())].push_back(row.error);
  }
  for (std::size_t s = 0; s < out.size(); ++s) {
    auto& v = values[s];
    std::sort(v.begin(), v.end());
    out[s].count = v.size();
    out[s].min = v.front();
    out[s].q25 = quantile_sorted(v, 0.25);
    out[s].median = quantile_sorted(v, 0.5);
    out[s].q75 = quantile_sorted(v, 0.75);
    out[s].max = v.back();
  }
  return out;
}

const StudySummary& find_summary(const std::vector<StudySummary>& summary, ProfileRegime regime,
                                 const std::string& target) {
  for (const auto& s : summary)
    if (s.regime == regime && s.target == target) return s;
  throw InputError("study summary has no row for " + to_string(regime) + " / " + target);
}

void write_study_rows(const std::string& path, const std::vector<StudyRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_csv_row(out, {"regime", "replicate", "target", "error"});
  for (const auto& r : rows)
    write_csv_row(out, {to_string(r.regime), std::to_string(r.replicate), r.target, format_double(r.error)});
  if (!out) throw InputError("failed while writing '" + path + "'");
}

void write_study_summary(const std::string& path, const std::vector<StudySummary>& summary) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_csv_row(out, {"regime", "target", "count", "min", "q25", "median", "q75", "max"});
  for (const auto& s : summary)
    write_csv_row(out, {to_string(s.regime), s.target, std::to_string(s.count), format_double(s.min),
                        format_double(s.q25), format_double(s.median), format_double(s.q75), format_double(s.max)});
  if (!out) throw InputError("failed while writing '" + path + "'");
}

}  // namespace ardprof
