// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ardprof/diagnostics.hpp"
#include "ardprof/estimators.hpp"
#include "ardprof/io.hpp"
#include "ardprof/mcmc.hpp"
#include "ardprof/nnls.hpp"
#include "ardprof/simulator.hpp"
#include "ardprof/study.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ardprof;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

ArdDataset one_row(const std::vector<std::int64_t>& y, const std::vector<std::string>& names) {
  CountMatrix c(1, static_cast<Eigen::Index>(y.size()));
  for (std::size_t k = 0; k < y.size(); ++k) c(0, static_cast<Eigen::Index>(k)) = y[k];
  return ArdDataset({"r"}, {0}, c, names, {"e"});
}

PopulationMargins single_subpop(std::int64_t N, std::int64_t Nk) {
  PopulationMargins m;
  m.total = N;
  m.alter_group_names = {"all"};
  m.alter_group_sizes = {N};
  m.subpop_names = {"k"};
  m.subpop_sizes = {Nk};
  m.cross_counts = {std::vector<std::int64_t>{Nk}};
  return m;
}

// ---- 1 -------------------------------------------------------------------

Outcome scale_up_anchors() {
  const double nicole = scale_up_degree(one_row({2}, {"k"}), single_subpop(280000000, 358000), {0})[0];
  const double births = scale_up_degree(one_row({3}, {"k"}), single_subpop(300000000, 3600000), {0})[0];
  const bool ok = nicole >= 1560.0 && nicole <= 1565.0 && births >= 249.0 && births <= 251.0;
  return {ok, "Nicole d = " + num(nicole) + ", births d = " + num(births)};
}

// ---- 2 -------------------------------------------------------------------

// Random margins with A alter groups and K subpopulations, every N_k > 0.
PopulationMargins random_margins(Rng& rng, std::size_t A, std::size_t K) {
  std::uniform_int_distribution<std::int64_t> cell(0, 50000);
  PopulationMargins m;
  m.alter_group_sizes.assign(A, 0);
  for (std::size_t a = 0; a < A; ++a) m.alter_group_names.push_back("a" + std::to_string(a));
  std::vector<std::vector<std::int64_t>> cols(K, std::vector<std::int64_t>(A));
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t a = 0; a < A; ++a) cols[k][a] = cell(rng);
    cols[k][k % A] += 1;
  }
  // Everyone outside the listed subpopulations pads N_a.
  for (std::size_t a = 0; a < A; ++a) {
    std::int64_t s = 0;
    for (std::size_t k = 0; k < K; ++k) s += cols[k][a];
    m.alter_group_sizes[a] = s + cell(rng) * 100 + 1;
  }
  m.total = 0;
  for (auto n : m.alter_group_sizes) m.total += n;
  for (std::size_t k = 0; k < K; ++k) {
    m.subpop_names.push_back("k" + std::to_string(k));
    std::int64_t s = 0;
    for (auto v : cols[k]) s += v;
    m.subpop_sizes.emplace_back(s);
    m.cross_counts.emplace_back(cols[k]);
  }
  m.validate();
  return m;
}

Outcome ratio_is_first_em_step() {
  Rng rng = make_stream(2002);
  std::uniform_int_distribution<std::size_t> dimA(2, 10);
  std::uniform_int_distribution<std::int64_t> count(0, 9);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t A = dimA(rng);
    const std::size_t K = A + std::uniform_int_distribution<std::size_t>(0, 6)(rng);
    const auto m = random_margins(rng, A, K);
    std::vector<std::int64_t> y(K);
    for (auto& v : y) v = count(rng);
    y[rep % K] += 1;
    const auto data = one_row(y, m.subpop_names);
    const auto ratio = simple_ratio_mixing(data, m, iota(K));
    const Eigen::VectorXd step =
        em_update(data.counts().row(0).cast<double>().transpose(), known_profile_block(m, iota(K)), m.random_mixing());
    const auto em = em_mixing(data.counts().row(0).cast<double>().transpose(), known_profile_block(m, iota(K)),
                              m.random_mixing());
    worst = std::max(worst, (step - ratio.estimates.row(0).transpose()).cwiseAbs().maxCoeff());
    worst = std::max(worst, (em.trajectory.at(1) - ratio.estimates.row(0).transpose()).cwiseAbs().maxCoeff());
  }
  // Same algebra evaluated in a different order: agreement to rounding.
  return {worst <= 1e-14, "max |ratio - EM step 1| = " + num(worst) + " over 1000 instances"};
}

// ---- 3 -------------------------------------------------------------------

double mixture_loglik(const Eigen::VectorXd& y, const Eigen::MatrixXd& h, const Eigen::VectorXd& m) {
  double ll = 0.0;
  for (Eigen::Index k = 0; k < h.cols(); ++k)
    if (y[k] > 0) ll += y[k] * std::log(m.dot(h.col(k)));
  return ll;
}

Outcome em_monotone() {
  Rng rng = make_stream(3003);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::poisson_distribution<std::int64_t> pois(2.0);
  std::size_t poisson_bad = 0, mixture_bad = 0, steps = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto A = static_cast<Eigen::Index>(2 + rep % 9);
    const auto K = A + static_cast<Eigen::Index>(rep % 5);
    Eigen::VectorXd y(K);
    for (Eigen::Index k = 0; k < K; ++k) y[k] = static_cast<double>(pois(rng));
    y[0] += 1.0;
    Eigen::VectorXd init(A);
    for (Eigen::Index a = 0; a < A; ++a) init[a] = 0.05 + u(rng);
    init /= init.sum();

    // Scaled-down block: every alter group's profile sums to the same c, so
    // the EM map is exactly EM for the Poisson model at fixed degree.
    Eigen::MatrixXd h(A, K);
    for (Eigen::Index a = 0; a < A; ++a) {
      for (Eigen::Index k = 0; k < K; ++k) h(a, k) = u(rng) * u(rng);
      h.row(a) *= 0.01 / h.row(a).sum();
    }
    const auto r = em_mixing(y, h, init, {300, 1e-13});
    for (std::size_t t = 1; t < r.trajectory.size(); ++t, ++steps)
      poisson_bad += poisson_observed_loglik(y, h, r.trajectory[t], 300.0) <
                     poisson_observed_loglik(y, h, r.trajectory[t - 1], 300.0) - 1e-12;

    // Unrestricted block: the mixture likelihood sum_k y_k log(m . h_k).
    Eigen::MatrixXd g(A, K);
    for (Eigen::Index a = 0; a < A; ++a)
      for (Eigen::Index k = 0; k < K; ++k) g(a, k) = 0.02 * u(rng) * u(rng);
    const auto s = em_mixing(y, g, init, {300, 1e-13});
    for (std::size_t t = 1; t < s.trajectory.size(); ++t, ++steps)
      mixture_bad += mixture_loglik(y, g, s.trajectory[t]) < mixture_loglik(y, g, s.trajectory[t - 1]) - 1e-12;
  }
  return {poisson_bad == 0 && mixture_bad == 0,
          std::to_string(poisson_bad + mixture_bad) + " decreases in " + std::to_string(steps) +
              " EM steps (2 x 1000 instances, tolerance 1e-12)"};
}

// ---- 4 -------------------------------------------------------------------

Outcome nnls_matches_enumeration() {
  Rng rng = make_stream(4004);
  std::normal_distribution<double> z;
  std::uniform_int_distribution<int> rows(3, 25);
  double worst_diff = 0.0, worst_kkt = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    const int n = rows(rng);
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 3; ++j) X(i, j) = z(rng);
      y[i] = z(rng);
    }
    if (rep % 3 == 0) X.col(2) = X.col(0) + 0.3 * X.col(1) + 0.01 * X.col(2);  // nearly collinear
    const auto fit = nnls_solve(X, y);
    const Eigen::VectorXd ref = oracle::nnls_enumerate(X, y);
    worst_diff = std::max(worst_diff, (fit.coefficients - ref).cwiseAbs().maxCoeff());
    worst_kkt = std::max(worst_kkt, nnls_kkt_violation(X, y, fit.coefficients));
  }
  return {worst_diff <= 1e-10 && worst_kkt < 1e-8,
          "max |LH - enumeration| = " + num(worst_diff) + ", max KKT violation = " + num(worst_kkt)};
}

// ---- 5 -------------------------------------------------------------------

Outcome study_ordering() {
  StudyOptions o;
  o.replicates = 100;
  o.seed = 1;
  const auto res = run_study(o);
  const auto med = [&](ProfileRegime r, const char* t) { return find_summary(res.summary, r, t).median; };
  using R = ProfileRegime;
  const double sep_m = med(R::separable, kMixingTarget), sd_m = med(R::scaled_down, kMixingTarget);
  const double sep_h = med(R::separable, kLatentTarget), sd_h = med(R::scaled_down, kLatentTarget);
  const double vio_h = med(R::violating, kLatentTarget), flat_h = med(R::flat, kLatentTarget);
  const bool a = sep_m < sd_m;
  const bool b = sep_h < sd_h;
  const bool c = vio_h > std::max({sep_h, sd_h, flat_h});
  const bool d = flat_h >= 2.0 * sd_h;
  std::string detail = "median mixing sep " + num(sep_m) + " < sd " + num(sd_m) + (a ? " ok" : " NO") +
                       "; latent sep " + num(sep_h) + " < sd " + num(sd_h) + (b ? " ok" : " NO") +
                       "; violating worst " + num(vio_h) + (c ? " ok" : " NO") + "; flat/sd " + num(flat_h / sd_h) +
                       (d ? " ok" : " NO");
  return {a && b && c && d, detail};
}

// ---- 6 -------------------------------------------------------------------

Outcome conditionals() {
  WorldOptions w;
  w.respondents = 300;
  w.seed = 6006;
  const auto sim = simulate(make_sim_config(w));
  SamplerConfig c;
  c.mode = EstimationMode::joint;
  const GibbsMetropolis g(sim.dataset, sim.profile, c);
  auto s = g.make_state(sim.truth, make_stream(6007));
  const auto& ld = s.params.log_degrees;
  const double n = static_cast<double>(ld.size());
  const Eigen::ArrayXXd logh = s.params.latent_profile.array().log();
  const double nh = static_cast<double>(logh.size());
  const auto& m = s.params.mixing.values();
  const double A = static_cast<double>(m.cols());

  std::vector<double> u[6];
  for (int t = 0; t < 10000; ++t) {
    const Hyperparameters before = s.params.hyper;
    g.step_hyperparams(s);
    const auto& hp = s.params.hyper;
    u[0].push_back(oracle::normal_cdf(hp.mu_d, ld.mean(), before.sigma_d / std::sqrt(n)));
    u[1].push_back(oracle::scaled_inv_chi2_cdf(hp.sigma_d * hp.sigma_d, n - 1.0,
                                               (ld.array() - hp.mu_d).square().sum() / n));
    for (Eigen::Index e = 0; e < m.rows(); ++e) {
      u[2].push_back(oracle::normal_cdf(hp.mu_m[e], m.row(e).mean(), before.sigma_m[e] / std::sqrt(A)));
      u[3].push_back(oracle::scaled_inv_chi2_cdf(hp.sigma_m[e] * hp.sigma_m[e], A - 1.0,
                                                 (m.row(e).array() - hp.mu_m[e]).square().sum() / A));
    }
    u[4].push_back(oracle::normal_cdf(hp.mu_h, logh.mean(), before.sigma_h / std::sqrt(nh)));
    u[5].push_back(oracle::scaled_inv_chi2_cdf(hp.sigma_h * hp.sigma_h, nh - 1.0, (logh - hp.mu_h).square().sum() / nh));
  }
  const char* names[6] = {"mu_d", "sigma2_d", "mu_m", "sigma2_m", "mu_h", "sigma2_h"};
  bool ok = true;
  std::string detail = "KS p:";
  for (int i = 0; i < 6; ++i) {
    const double p = oracle::ks_test(u[i], [](double v) { return std::clamp(v, 0.0, 1.0); }).p_value;
    ok = ok && p > 0.01;
    detail += std::string(" ") + names[i] + "=" + num(p);
  }

  // Prior only: log d_i should settle on Normal(mu_d, sigma_d^2).
  WorldOptions w2;
  w2.respondents = 2000;
  w2.seed = 6008;
  const auto sim2 = simulate(make_sim_config(w2));
  SamplerConfig c2;
  c2.mode = EstimationMode::joint;
  c2.use_likelihood = false;
  c2.update_hyperparameters = false;
  const GibbsMetropolis g2(sim2.dataset, sim2.profile, c2);
  ModelParams start = sim2.truth;
  start.hyper.mu_d = 5.5;
  start.hyper.sigma_d = 0.4;
  auto s2 = g2.make_state(start, make_stream(6009));
  for (int it = 0; it < 600; ++it) {
    g2.sweep(s2);
    if ((it + 1) % 50 == 0 && it < 400) g2.adapt(s2);
  }
  std::vector<double> x(s2.params.log_degrees.data(), s2.params.log_degrees.data() + s2.params.log_degrees.size());
  const double p = oracle::ks_test(x, [](double v) { return oracle::normal_cdf(v, 5.5, 0.4); }).p_value;
  ok = ok && p > 0.01;
  detail += "; prior-only normality p=" + num(p);
  return {ok, detail};
}

// ---- 7 -------------------------------------------------------------------

Outcome calibration() {
  std::size_t rhat_ok = 0, rhat_total = 0, covered = 0, cells = 0;
  double worst_replicate = 1.0;
  for (std::size_t r = 0; r < 50; ++r) {
    WorldOptions w;
    w.respondents = 500;
    w.seed = 7000 + r;
    const auto sim = simulate(make_sim_config(w));
    SamplerConfig c;
    c.chains = 3;
    c.iterations = 2000;
    c.burn_in = 1000;
    c.seed = 70000 + r;
    const auto fit = run(c, sim.dataset, sim.profile, sim.margins);
    std::size_t ok = 0, total = 0;
    for (const auto& s : fit.summary) {
      if (std::isnan(s.rhat)) continue;
      ++total;
      ok += s.rhat < 1.1;
    }
    rhat_ok += ok;
    rhat_total += total;
    worst_replicate = std::min(worst_replicate, static_cast<double>(ok) / static_cast<double>(total));

    const auto latent = sim.profile.latent_columns();
    for (std::size_t j = 0; j < latent.size(); ++j)
      for (std::size_t a = 0; a < sim.profile.num_alter_groups(); ++a) {
        const std::string name = "h." + sim.profile.alter_group_names()[a] + "." + sim.profile.subpop_names()[latent[j]];
        auto draws = fit.draws.pooled(*fit.draws.index(name));
        std::sort(draws.begin(), draws.end());
        const double lo = quantile_sorted(draws, 0.1), hi = quantile_sorted(draws, 0.9);
        const double truth = sim.truth.latent_profile(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j));
        covered += truth >= lo && truth <= hi;
        ++cells;
      }
  }
  const double frac = static_cast<double>(rhat_ok) / static_cast<double>(rhat_total);
  const double cover = static_cast<double>(covered) / static_cast<double>(cells);
  return {frac >= 0.95 && std::abs(cover - 0.8) <= 0.12,
          "R-hat < 1.1 for " + num(100.0 * frac) + "% of parameters (lowest replicate " + num(100.0 * worst_replicate) +
              "%); 80% interval coverage " + num(100.0 * cover) + "% over " + std::to_string(cells) + " masked cells"};
}

// ---- 8 -------------------------------------------------------------------

Outcome separable_unbiased() {
  WorldOptions w;
  w.regime = ProfileRegime::separable;
  w.respondents = 10000;
  w.seed = 8008;
  const auto sim = simulate(make_sim_config(w));
  const auto known = sim.profile.known_columns();
  const auto est = simple_ratio_mixing(sim.dataset, sim.margins, known);
  const auto& truth = sim.truth.mixing.values();
  const auto E = static_cast<std::size_t>(truth.rows());
  const auto A = truth.cols();
  double worst = 0.0;
  std::size_t outside = 0;
  for (std::size_t e = 0; e < E; ++e) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < sim.dataset.num_respondents(); ++i)
      if (sim.dataset.ego_group(i) == e && est.valid[i]) members.push_back(i);
    const double n = static_cast<double>(members.size());
    for (Eigen::Index a = 0; a < A; ++a) {
      std::vector<double> v;
      for (auto i : members) v.push_back(est.estimates(static_cast<Eigen::Index>(i), a));
      const double se = sample_sd(v) / std::sqrt(n);
      const double z = std::abs(mean(v) - truth(static_cast<Eigen::Index>(e), a)) / se;
      worst = std::max(worst, z);
      outside += z > 2.0;
    }
  }
  return {outside == 0, std::to_string(outside) + " of " + std::to_string(E * static_cast<std::size_t>(A)) +
                            " cells beyond 2 MC SE (largest |z| = " + num(worst) + ")"};
}

// ---- 9 -------------------------------------------------------------------

Outcome determinism() {
  fixture::TempDir dir("accept");
  const auto cli = [&](const std::string& args) { return fixture::run_cli(args, dir.file("log.txt")).code; };
  bool ran = true;
  for (const char* tag : {"a", "b"}) {
    const std::string t(tag);
    const std::string s = dir.file("sim_" + t);
    ran = ran && cli("simulate --n 300 --seed 11 --out " + s) == 0;
    // Both fit runs read the same files; the manifest records input paths.
    const std::string src = dir.file("sim_a");
    const std::string in = " --responses " + src + "/responses.csv --profiles " + src + "/profiles.csv --margins " +
                           src + "/margins.csv --seed 12";
    ran = ran && cli("fit simple" + in + " --bootstrap 20 --out " + dir.file("simple_" + t)) == 0;
    ran = ran && cli("fit simple" + in + " --mixing em --bootstrap 10 --out " + dir.file("em_" + t)) == 0;
    ran = ran && cli("fit mcmc" + in + " --chains 2 --iters 200 --burn-in 100 --out " + dir.file("mcmc_" + t)) == 0;
    ran = ran && cli("study --reps 5 --seed 13 --out " + dir.file("study_" + t)) == 0;
  }
  std::size_t compared = 0, differ = 0;
  for (const char* d : {"sim", "simple", "em", "mcmc", "study"}) {
    const auto base = std::filesystem::path(dir.file(std::string(d) + "_a"));
    if (!std::filesystem::exists(base)) continue;
    for (const auto& f : std::filesystem::directory_iterator(base)) {
      const auto ext = f.path().extension();
      if (ext != ".csv" && ext != ".json") continue;
      const auto other = std::filesystem::path(dir.file(std::string(d) + "_b")) / f.path().filename();
      ++compared;
      differ += fixture::read_text(f.path().string()) != fixture::read_text(other.string());
    }
  }
  return {ran && compared > 0 && differ == 0, std::string(ran ? "" : "a command failed; ") +
                                                  std::to_string(differ) + " of " + std::to_string(compared) +
                                                  " output files differ between identical runs"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
      {"scale-up anchors", scale_up_anchors},
      {"ratio estimator is the first EM iterate", ratio_is_first_em_step},
      {"EM monotonicity", em_monotone},
      {"NNLS matches active-set enumeration", nnls_matches_enumeration},
      {"regime ordering in the replicate study", study_ordering},
      {"Gibbs conditionals and prior-only run", conditionals},
      {"posterior convergence and calibration", calibration},
      {"ratio mixing unbiased under separability", separable_unbiased},
      {"CLI determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = checks[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %zu %s: %s. %s (%.1f s)\n", i + 1, o.pass ? "PASS" : "FAIL", checks[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failed, checks.size());
  return failed == 0 ? 0 : 1;
}
