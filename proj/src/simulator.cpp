#include "ardprof/simulator.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "ardprof/error.hpp"
#include "ardprof/kernels.hpp"

namespace ardprof {

namespace {

std::string column_name(const char* stem, std::size_t k, std::size_t count) {
  std::ostringstream name;
  name << stem << std::setw(count >= 100 ? 3 : 2) << std::setfill('0') << (k + 1);
  return name.str();
}

// Exact integer N_a * fraction for every a, with all ratios T_a / N_a equal.
std::vector<std::int64_t> scaled_totals(const PopulationMargins& base, double fraction) {
  if (!(fraction > 0.0) || !(fraction < 1.0)) throw InputError("known_fraction must lie in (0, 1)");
  std::vector<std::int64_t> totals;
  for (auto Na : base.alter_group_sizes) {
    const double exact = static_cast<double>(Na) * fraction;
    const auto t = static_cast<std::int64_t>(std::llround(exact));
    if (std::abs(exact - static_cast<double>(t)) > 1e-6 || t <= 0)
      throw InputError("regime infeasible: N_a * known_fraction is not an integer for every alter group");
    totals.push_back(t);
  }
  const std::int64_t sum_t = std::accumulate(totals.begin(), totals.end(), std::int64_t{0});
  for (std::size_t a = 0; a < totals.size(); ++a) {
    if (static_cast<__int128>(totals[a]) * base.total != static_cast<__int128>(base.alter_group_sizes[a]) * sum_t)
      throw InputError("regime infeasible: margins admit no exact scaled-down solution at this fraction");
  }
  return totals;
}

std::vector<double> dirichlet(Rng& rng, const std::vector<double>& alpha) {
  std::vector<double> w(alpha.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    std::gamma_distribution<double> g(alpha[j], 1.0);
    w[j] = g(rng);
    sum += w[j];
  }
  for (auto& x : w) x /= sum;
  return w;
}

bool is_oldest(std::size_t a, std::size_t A, std::size_t blocks) {
  if (blocks == 0 || A % blocks != 0) return a + 1 == A;
  const std::size_t block = A / blocks;
  return (a % block) + 1 == block;
}

RegimeProfiles finish(const PopulationMargins& base, std::vector<std::vector<std::int64_t>> cols) {
  RegimeProfiles out;
  out.margins = base;
  const auto K = cols.size();
  out.margins.subpop_names.clear();
  out.margins.subpop_sizes.clear();
  out.margins.cross_counts.clear();
  for (std::size_t k = 0; k < K; ++k) {
    out.margins.subpop_names.push_back(column_name("name", k, K));
    out.margins.subpop_sizes.emplace_back(std::accumulate(cols[k].begin(), cols[k].end(), std::int64_t{0}));
    out.margins.cross_counts.emplace_back(std::move(cols[k]));
  }
  out.margins.validate();
  out.profile = ProfileMatrix::from_margins(out.margins, std::vector<bool>(K, false));
  return out;
}

}  // namespace

std::string to_string(ProfileRegime regime) {
  switch (regime) {
    case ProfileRegime::separable: return "separable";
    case ProfileRegime::scaled_down: return "scaled_down";
    case ProfileRegime::violating: return "violating";
    case ProfileRegime::flat: return "flat";
  }
  return "unknown";
}

ProfileRegime parse_regime(std::string_view text) {
  for (auto r : all_regimes())
    if (to_string(r) == text) return r;
  throw InputError("unknown profile regime '" + std::string(text) +
                   "' (expected separable, scaled_down, violating or flat)");
}

const std::array<ProfileRegime, 4>& all_regimes() {
  static const std::array<ProfileRegime, 4> regimes{ProfileRegime::separable, ProfileRegime::scaled_down,
                                                    ProfileRegime::violating, ProfileRegime::flat};
  return regimes;
}

RegimeProfiles make_regime_profiles(ProfileRegime regime, const PopulationMargins& base, std::size_t K,
                                    const RegimeOptions& options) {
  PopulationMargins population = base;
  population.subpop_names.clear();
  population.subpop_sizes.clear();
  population.cross_counts.clear();
  population.validate();
  const std::size_t A = population.num_alter_groups();
  if (K == 0) throw InputError("at least one known subpopulation is required");
  const auto& Na = population.alter_group_sizes;
  Rng rng = make_stream(options.seed, static_cast<std::uint64_t>(regime));
  std::vector<std::vector<std::int64_t>> cols(K, std::vector<std::int64_t>(A, 0));

  switch (regime) {
    case ProfileRegime::separable: {
      // Column k covers alter group k mod A only; groups with several columns
      // split N_a evenly so every group is covered exactly once in total.
      if (K < A) throw InputError("regime infeasible: separable profiles need at least one column per alter group");
      std::vector<std::int64_t> per_group(A, 0);
      for (std::size_t k = 0; k < K; ++k) ++per_group[k % A];
      for (std::size_t k = 0; k < K; ++k) {
        const std::size_t a = k % A;
        if (Na[a] % per_group[a] != 0)
          throw InputError("regime infeasible: N_a not divisible by the columns assigned to its group");
        cols[k][a] = Na[a] / per_group[a];
      }
      break;
    }
    case ProfileRegime::scaled_down: {
      const auto totals = scaled_totals(population, options.known_fraction);
      std::vector<std::vector<double>> raw(K - 1, std::vector<double>(A));
      std::uniform_real_distribution<double> size_factor(0.5, 1.5);
      std::vector<double> used(A, 0.0);
      for (std::size_t k = 0; k + 1 < K; ++k) {
        const auto shape = dirichlet(rng, std::vector<double>(A, 1.5));
        const double mass = size_factor(rng);
        for (std::size_t a = 0; a < A; ++a) {
          raw[k][a] = mass * shape[a] * static_cast<double>(A);
          used[a] += raw[k][a];
        }
      }
      // The final column absorbs whatever keeps sum_k N_ak = N_a * fraction.
      const double peak = K > 1 ? *std::max_element(used.begin(), used.end()) : 1.0;
      const double scale = 0.8 * options.known_fraction / peak;
      for (std::size_t a = 0; a < A; ++a) {
        std::int64_t taken = 0;
        for (std::size_t k = 0; k + 1 < K; ++k) {
          cols[k][a] = static_cast<std::int64_t>(std::floor(scale * raw[k][a] * static_cast<double>(Na[a])));
          taken += cols[k][a];
        }
        cols[K - 1][a] = totals[a] - taken;
      }
      break;
    }
    case ProfileRegime::violating: {
      // Names popular almost exclusively with the oldest alter groups.
      const double target = options.known_fraction * static_cast<double>(population.total) / static_cast<double>(K);
      std::gamma_distribution<double> jitter(1.5, 1.0);
      std::uniform_real_distribution<double> size_factor(0.5, 1.5);
      for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> w(A);
        double sum = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
          w[a] = (is_oldest(a, A, options.gender_blocks) ? 1.0 : 0.04) * jitter(rng);
          sum += w[a];
        }
        const double Nk = target * size_factor(rng);
        for (std::size_t a = 0; a < A; ++a) {
          cols[k][a] = std::min<std::int64_t>(Na[a], static_cast<std::int64_t>(std::floor(Nk * w[a] / sum)));
        }
      }
      break;
    }
    case ProfileRegime::flat: {
      const auto totals = scaled_totals(population, options.known_fraction);
      for (std::size_t a = 0; a < A; ++a) {
        if (totals[a] % static_cast<std::int64_t>(K) != 0)
          throw InputError("regime infeasible: flat profiles need N_a * known_fraction divisible by K");
        for (std::size_t k = 0; k < K; ++k) cols[k][a] = totals[a] / static_cast<std::int64_t>(K);
      }
      break;
    }
  }
  return finish(population, std::move(cols));
}

Eigen::MatrixXd draw_latent_profiles(Rng& rng, std::size_t A, std::size_t H, double log_mean, double log_sd) {
  std::normal_distribution<double> z(log_mean, log_sd);
  Eigen::MatrixXd h(static_cast<Eigen::Index>(A), static_cast<Eigen::Index>(H));
  for (Eigen::Index k = 0; k < h.cols(); ++k)
    for (Eigen::Index a = 0; a < h.rows(); ++a) h(a, k) = std::exp(z(rng));
  return h;
}

PopulationMargins default_population() {
  // Sizes in units of 120,000 so that every regime's counts divide exactly.
  constexpr std::int64_t unit = 120000;
  PopulationMargins p;
  p.alter_group_names = {"M0-20", "M21-40", "M41-60", "M61+", "F0-20", "F21-40", "F41-60", "F61+"};
  for (std::int64_t units : {363, 362, 312, 213, 347, 363, 325, 215}) p.alter_group_sizes.push_back(units * unit);
  p.total = std::accumulate(p.alter_group_sizes.begin(), p.alter_group_sizes.end(), std::int64_t{0});
  return p;
}

std::vector<std::string> default_ego_groups() { return {"F18-30", "F31-50", "F51+", "M18-30", "M31-50", "M51+"}; }

MixingMatrix default_mixing(const PopulationMargins& population) {
  // Stand-in for a published estimate: ties decay with age distance and are
  // more likely within gender, on top of random mixing N_a / N.
  const auto base = population.random_mixing();
  const std::size_t A = population.num_alter_groups();
  const std::array<double, 3> ego_age{0.9, 1.7, 2.7};
  Eigen::MatrixXd m(6, static_cast<Eigen::Index>(A));
  for (std::size_t e = 0; e < 6; ++e) {
    const bool ego_female = e < 3;
    for (std::size_t a = 0; a < A; ++a) {
      const bool alter_female = A == 8 ? a >= 4 : false;
      const double band = A == 8 ? static_cast<double>(a % 4) : static_cast<double>(a);
      const double same_gender = ego_female == alter_female ? 1.6 : 1.0;
      m(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(a)) =
          base[static_cast<Eigen::Index>(a)] * std::exp(-std::abs(ego_age[e % 3] - band)) * same_gender;
    }
  }
  return MixingMatrix::normalized(std::move(m));
}

void SimConfig::validate() const {
  if (respondents == 0) throw InputError("number of respondents must be at least 1");
  if (ego_group_probs.size() != ego_group_names.size() || ego_group_probs.empty())
    throw InputError("ego group probabilities must match ego group names");
  double psum = 0.0;
  for (double p : ego_group_probs) {
    if (!(p >= 0.0)) throw InputError("ego group probabilities must be nonnegative");
    psum += p;
  }
  if (std::abs(psum - 1.0) > 1e-9) throw InputError("ego group probabilities must sum to 1");
  if (!(sigma_d > 0.0)) throw InputError("sigma_d must be positive");
  if (true_mixing.num_ego_groups() != ego_group_names.size() ||
      true_mixing.num_alter_groups() != true_profile.num_alter_groups())
    throw InputError("mixing matrix shape does not match ego groups and alter groups");
  if (overdispersion.size() != true_profile.num_subpops())
    throw InputError("one overdispersion per subpopulation is required");
  for (double w : overdispersion)
    if (!(w > 1.0)) throw InputError("overdispersion must exceed 1");
}

SimConfig make_sim_config(const WorldOptions& opt) {
  SimConfig cfg;
  const auto population = default_population();
  auto known = make_regime_profiles(opt.regime, population, opt.known_columns, opt.regime_options);
  const std::size_t A = population.num_alter_groups();
  const std::size_t K = opt.known_columns;
  const std::size_t H = opt.latent_columns;

  Rng latent_rng = make_stream(opt.latent_seed.value_or(opt.seed), 0x1a7e47);
  const Eigen::MatrixXd latent = draw_latent_profiles(latent_rng, A, H, opt.latent_log_mean, opt.latent_log_sd);

  Eigen::MatrixXd h(static_cast<Eigen::Index>(A), static_cast<Eigen::Index>(K + H));
  h.leftCols(static_cast<Eigen::Index>(K)) = known.profile.values();
  h.rightCols(static_cast<Eigen::Index>(H)) = latent;
  auto names = known.profile.subpop_names();
  std::vector<bool> flags(K, false);
  for (std::size_t j = 0; j < H; ++j) {
    names.push_back(column_name("hidden", j, H));
    flags.push_back(true);
    known.margins.subpop_names.push_back(names.back());
    known.margins.subpop_sizes.emplace_back(std::nullopt);
    known.margins.cross_counts.emplace_back(std::nullopt);
  }

  cfg.respondents = opt.respondents;
  cfg.ego_group_names = default_ego_groups();
  cfg.ego_group_probs.assign(cfg.ego_group_names.size(), 1.0 / static_cast<double>(cfg.ego_group_names.size()));
  cfg.true_mixing = default_mixing(population);
  cfg.true_profile = ProfileMatrix(population.alter_group_names, std::move(names), std::move(h), std::move(flags));
  cfg.margins = std::move(known.margins);
  cfg.sigma_d = opt.sigma_d;
  cfg.mu_d = std::log(opt.mean_degree) - 0.5 * opt.sigma_d * opt.sigma_d;
  cfg.overdispersion.assign(K + H, opt.omega);
  cfg.seed = opt.seed;
  cfg.regime = opt.regime;
  cfg.latent_log_mean = opt.latent_log_mean;
  cfg.latent_log_sd = opt.latent_log_sd;
  return cfg;
}

SimResult simulate(const SimConfig& config) {
  config.validate();
  const std::size_t n = config.respondents;
  const std::size_t K = config.true_profile.num_subpops();
  const std::size_t E = config.ego_group_names.size();

  // Expected ties per unit degree for every (ego group, subpopulation).
  const Eigen::MatrixXd inner = config.true_mixing.values() * config.true_profile.values();
  for (Eigen::Index e = 0; e < inner.rows(); ++e)
    for (Eigen::Index k = 0; k < inner.cols(); ++k)
      if (!(inner(e, k) > 0.0) && config.ego_group_probs[static_cast<std::size_t>(e)] > 0.0)
        throw DegenerateError("subpopulation '" + config.true_profile.subpop_names()[static_cast<std::size_t>(k)] +
                              "' has zero expected ties (all-zero profile column)");

  Rng rng = make_stream(config.seed, 0);
  std::discrete_distribution<std::size_t> ego_draw(config.ego_group_probs.begin(), config.ego_group_probs.end());
  std::normal_distribution<double> log_degree(config.mu_d, config.sigma_d);

  std::vector<std::string> ids(n);
  std::vector<std::size_t> ego(n);
  Eigen::VectorXd log_d(static_cast<Eigen::Index>(n));
  CountMatrix y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(K));
  const int width = static_cast<int>(std::to_string(n).size());
  for (std::size_t i = 0; i < n; ++i) {
    std::ostringstream id;
    id << 'r' << std::setw(width) << std::setfill('0') << (i + 1);
    ids[i] = id.str();
    ego[i] = ego_draw(rng);
    const double ld = log_degree(rng);
    log_d[static_cast<Eigen::Index>(i)] = ld;
    const double d = std::exp(ld);
    for (std::size_t k = 0; k < K; ++k) {
      const double mu = d * inner(static_cast<Eigen::Index>(ego[i]), static_cast<Eigen::Index>(k));
      y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = negbin_sample(rng, mu, config.overdispersion[k]);
    }
  }

  SimResult out;
  out.dataset = ArdDataset(std::move(ids), std::move(ego), std::move(y), config.true_profile.subpop_names(),
                           config.ego_group_names);
  out.profile = config.true_profile.observed();
  out.margins = config.margins;

  ModelParams& truth = out.truth;
  truth.log_degrees = std::move(log_d);
  truth.mixing = config.true_mixing;
  truth.overdispersion = Eigen::Map<const Eigen::VectorXd>(config.overdispersion.data(),
                                                           static_cast<Eigen::Index>(config.overdispersion.size()));
  const auto latent_cols = config.true_profile.latent_columns();
  truth.latent_profile.resize(static_cast<Eigen::Index>(config.true_profile.num_alter_groups()),
                              static_cast<Eigen::Index>(latent_cols.size()));
  for (std::size_t j = 0; j < latent_cols.size(); ++j)
    truth.latent_profile.col(static_cast<Eigen::Index>(j)) =
        config.true_profile.values().col(static_cast<Eigen::Index>(latent_cols[j]));
  truth.hyper.mu_d = config.mu_d;
  truth.hyper.sigma_d = config.sigma_d;
  truth.hyper.mu_m.resize(static_cast<Eigen::Index>(E));
  truth.hyper.sigma_m.resize(static_cast<Eigen::Index>(E));
  for (std::size_t e = 0; e < E; ++e) {
    const Eigen::RowVectorXd row = config.true_mixing.values().row(static_cast<Eigen::Index>(e));
    const double mean = row.mean();
    truth.hyper.mu_m[static_cast<Eigen::Index>(e)] = mean;
    truth.hyper.sigma_m[static_cast<Eigen::Index>(e)] =
        std::sqrt((row.array() - mean).square().sum() / static_cast<double>(row.size()));
  }
  truth.hyper.mu_h = config.latent_log_mean;
  truth.hyper.sigma_h = config.latent_log_sd;
  return out;
}

}  // namespace ardprof
