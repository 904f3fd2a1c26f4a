#include <cmath>
#include <vector>

#include "ardprof/error.hpp"
#include "ardprof/estimators.hpp"
#include "ardprof/identifiability.hpp"
#include "ardprof/simulator.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ardprof;

namespace {

PopulationMargins four_groups() {
  PopulationMargins p;
  p.alter_group_names = {"a1", "a2", "a3", "a4"};
  p.alter_group_sizes = {4000000, 3000000, 2000000, 1000000};
  p.total = 10000000;
  return p;
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("separable with K = A is an identity pattern") {
    const auto r = make_regime_profiles(ProfileRegime::separable, four_groups(), 4);
    CHECK(r.profile.values().isApprox(Eigen::MatrixXd::Identity(4, 4)));
  }

  TEST_CASE("separable with K > A still covers each group exactly once") {
    const auto r = make_regime_profiles(ProfileRegime::separable, default_population(), 12);
    const Eigen::VectorXd row_sums = r.profile.values().rowwise().sum();
    CHECK(row_sums.isApprox(Eigen::VectorXd::Ones(8), 1e-14));
    for (Eigen::Index k = 0; k < 12; ++k) CHECK((r.profile.values().col(k).array() > 0.0).count() == 1);
    CHECK_THROWS_AS(make_regime_profiles(ProfileRegime::separable, default_population(), 7), InputError);
  }

  TEST_CASE("flat regime is rank one and flagged") {
    const auto r = make_regime_profiles(ProfileRegime::flat, default_population(), 12);
    for (Eigen::Index k = 1; k < 12; ++k) CHECK(r.profile.values().col(k).isApprox(r.profile.values().col(0)));
    CHECK(validate_identifiability(r.profile).deficient);
  }

  TEST_CASE("scaled-down identity holds on the constructed matrix") {
    const auto base = default_population();
    const auto r = make_regime_profiles(ProfileRegime::scaled_down, base, 12);
    double nk = 0.0;
    for (const auto& s : r.margins.subpop_sizes) nk += static_cast<double>(*s);
    const double target = nk / static_cast<double>(base.total);
    CHECK(target == doctest::Approx(0.01).epsilon(1e-12));
    const Eigen::VectorXd col_sums = r.profile.values().rowwise().sum();
    for (Eigen::Index a = 0; a < 8; ++a) CHECK(std::abs(col_sums[a] - target) < 1e-12);
    CHECK((r.profile.values().array() > 0.0).all());
  }

  TEST_CASE("violating regime departs strongly on young groups") {
    const auto r = make_regime_profiles(ProfileRegime::violating, default_population(), 12);
    std::vector<std::size_t> all(12);
    for (std::size_t k = 0; k < 12; ++k) all[k] = k;
    const auto rep = check_scaled_down(r.margins, all);
    CHECK_FALSE(rep.pass);
    // Young groups (0-20) are underrepresented by more than half the target.
    for (std::size_t a : {0u, 4u}) CHECK(rep.deviation[a] < -0.5 * rep.target);
    // Oldest groups are overrepresented.
    for (std::size_t a : {3u, 7u}) CHECK(rep.deviation[a] > rep.target);
  }

  TEST_CASE("regimes are pure functions of their inputs") {
    for (auto reg : all_regimes()) {
      const auto a = make_regime_profiles(reg, default_population(), 12);
      const auto b = make_regime_profiles(reg, default_population(), 12);
      CHECK(a.profile.values() == b.profile.values());
    }
  }

  TEST_CASE("law of large numbers under random mixing") {
    const auto base = default_population();
    const auto known = make_regime_profiles(ProfileRegime::scaled_down, base, 12);
    SimConfig cfg;
    cfg.respondents = 100000;
    cfg.ego_group_names = {"all"};
    cfg.ego_group_probs = {1.0};
    cfg.true_mixing = MixingMatrix(base.random_mixing().transpose());
    cfg.true_profile = known.profile;
    cfg.margins = known.margins;
    cfg.mu_d = std::log(750.0);
    cfg.sigma_d = 1e-9;
    cfg.overdispersion.assign(12, 1.0 + 1e-9);
    cfg.seed = 17;
    const auto sim = simulate(cfg);
    for (std::size_t k = 0; k < 12; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < cfg.respondents; ++i) s += static_cast<double>(sim.dataset(i, k));
      const double m = s / static_cast<double>(cfg.respondents);
      const double want = 750.0 * static_cast<double>(*known.margins.subpop_sizes[k]) / static_cast<double>(base.total);
      const double se = std::sqrt(want / static_cast<double>(cfg.respondents));
      CHECK(std::abs(m - want) < 4.0 * se);
    }
  }

  TEST_CASE("law of large numbers per ego group under nonrandom mixing") {
    WorldOptions w;
    w.regime = ProfileRegime::violating;
    w.respondents = 100000;
    w.seed = 23;
    const auto sim = simulate(make_sim_config(w));
    const auto& m = sim.truth.mixing.values();
    const auto& data = sim.dataset;
    const auto known = sim.profile.known_columns();
    // y_ik / d_i averages to sum_a m(e,a) h(a,k) within each ego group.
    for (std::size_t e = 0; e < data.num_ego_groups(); ++e)
      for (auto k : known) {
        std::vector<double> r;
        for (std::size_t i = 0; i < data.num_respondents(); ++i)
          if (data.ego_group(i) == e) r.push_back(static_cast<double>(data(i, k)) / sim.truth.degree(i));
        double mean = 0.0, ss = 0.0;
        for (double v : r) mean += v;
        mean /= static_cast<double>(r.size());
        for (double v : r) ss += (v - mean) * (v - mean);
        const double se = std::sqrt(ss / static_cast<double>(r.size() - 1) / static_cast<double>(r.size()));
        const double want = m.row(static_cast<Eigen::Index>(e)).dot(sim.profile.values().col(static_cast<Eigen::Index>(k)));
        CHECK(std::abs(mean - want) < 4.0 * se);
      }
  }

  TEST_CASE("same seed gives a bit-identical dataset") {
    WorldOptions w;
    w.seed = 123;
    const auto a = simulate(make_sim_config(w));
    const auto b = simulate(make_sim_config(w));
    CHECK(a.dataset.counts() == b.dataset.counts());
    CHECK(a.dataset.ego_groups() == b.dataset.ego_groups());
    CHECK(a.truth.log_degrees == b.truth.log_degrees);
    w.seed = 124;
    const auto c = simulate(make_sim_config(w));
    CHECK(a.dataset.counts() != c.dataset.counts());
  }

  TEST_CASE("per-column overdispersion about the true means") {
    // Var(y | mu) / mu = omega'. With the true mu_ik the Pearson ratio
    // mean((y - mu)^2 / mu) estimates omega' column by column.
    const auto pearson = [](const WorldOptions& w) {
      const auto cfg = make_sim_config(w);
      const auto sim = simulate(cfg);
      const Eigen::MatrixXd inner = cfg.true_mixing.values() * cfg.true_profile.values();
      const std::size_t n = sim.dataset.num_respondents();
      std::vector<double> out;
      for (std::size_t k = 0; k < sim.dataset.num_subpops(); ++k) {
        double stat = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double mu = sim.truth.degree(i) * inner(static_cast<Eigen::Index>(sim.dataset.ego_group(i)),
                                                        static_cast<Eigen::Index>(k));
          const double r = static_cast<double>(sim.dataset(i, k)) - mu;
          stat += r * r / mu;
        }
        out.push_back(stat / static_cast<double>(n));
      }
      return out;
    };

    WorldOptions w;
    w.omega = 3.0;
    w.respondents = 100000;
    w.seed = 8;
    for (double s : pearson(w)) CHECK(s == doctest::Approx(3.0).epsilon(0.05));

    // At n = 500 the ratio is noisy: with about 1% of the population per
    // known column and h near 0.01, 20% is roughly a two-sd band.
    w.respondents = 500;
    w.regime_options.known_fraction = 0.12;
    w.latent_log_mean = std::log(0.01);
    std::size_t within = 0, total = 0;
    for (std::uint64_t seed = 100; seed < 140; ++seed) {
      w.seed = seed;
      for (double s : pearson(w)) {
        within += std::abs(s / 3.0 - 1.0) < 0.2;
        ++total;
      }
    }
    CHECK(static_cast<double>(within) >= 0.95 * static_cast<double>(total));
  }

  TEST_CASE("truth carries the generating parameters") {
    WorldOptions w;
    w.seed = 3;
    const auto cfg = make_sim_config(w);
    const auto sim = simulate(cfg);
    CHECK(sim.truth.latent_profile.rows() == 8);
    CHECK(sim.truth.latent_profile.cols() == 6);
    CHECK(sim.profile.latent_columns().size() == 6);
    CHECK(sim.profile.values().rightCols(6).isZero());
    CHECK(sim.margins.subpop_sizes.back() == std::nullopt);
    CHECK_NOTHROW(sim.truth.validate());
  }

  TEST_CASE("invalid configurations") {
    WorldOptions w;
    w.respondents = 0;
    CHECK_THROWS_AS(simulate(make_sim_config(w)), InputError);
    CHECK_THROWS_AS(parse_regime("lumpy"), InputError);
    w = {};
    w.omega = 1.0;
    CHECK_THROWS_AS(simulate(make_sim_config(w)), InputError);
  }
}
