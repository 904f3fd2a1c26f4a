#include "ardprof/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ardprof/diagnostics.hpp"
#include "ardprof/error.hpp"
#include "ardprof/estimators.hpp"
#include "ardprof/parallel.hpp"

namespace ardprof {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinScale = 1e-8;
constexpr double kMaxScale = 1e4;
constexpr double kAdaptGain = 2.0;

double std_normal(Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  return z(rng);
}

bool metropolis_accept(Rng& rng, double log_ratio) {
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return std::log(u(rng)) < log_ratio;
}

void check_names(const std::vector<std::string>& a, const std::vector<std::string>& b, const char* what) {
  if (a.size() != b.size()) throw ModelError(std::string(what) + ": column counts differ");
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k] != b[k]) throw ModelError(std::string(what) + ": column " + std::to_string(k) + " is '" + a[k] +
                                       "' in one input and '" + b[k] + "' in the other");
}

void check_param_dims(const ModelParams& p, const ArdDataset& data, const ProfileMatrix& profile) {
  const auto n = static_cast<Eigen::Index>(data.num_respondents());
  const auto K = static_cast<Eigen::Index>(data.num_subpops());
  const auto E = data.num_ego_groups();
  const auto A = profile.num_alter_groups();
  const auto H = static_cast<Eigen::Index>(profile.latent_columns().size());
  if (p.log_degrees.size() != n) throw ModelError("parameters: expected " + std::to_string(n) + " degrees");
  if (p.mixing.num_ego_groups() != E || p.mixing.num_alter_groups() != A)
    throw ModelError("parameters: mixing matrix must be " + std::to_string(E) + " x " + std::to_string(A));
  if (p.overdispersion.size() != K) throw ModelError("parameters: expected " + std::to_string(K) + " overdispersions");
  if (p.latent_profile.rows() != static_cast<Eigen::Index>(A) || p.latent_profile.cols() != H)
    throw ModelError("parameters: latent profile must be " + std::to_string(A) + " x " + std::to_string(H));
  if (p.hyper.mu_m.size() != static_cast<Eigen::Index>(E) || p.hyper.sigma_m.size() != static_cast<Eigen::Index>(E))
    throw ModelError("parameters: mixing hyperparameters need one entry per ego group");
}

Eigen::MatrixXd full_profile(const ProfileMatrix& profile, const Eigen::MatrixXd& latent) {
  Eigen::MatrixXd h = profile.values();
  const auto cols = profile.latent_columns();
  for (std::size_t j = 0; j < cols.size(); ++j) h.col(static_cast<Eigen::Index>(cols[j])) = latent.col(static_cast<Eigen::Index>(j));
  return h;
}

}  // namespace

std::string to_string(EstimationMode mode) { return mode == EstimationMode::joint ? "joint" : "two_stage"; }

EstimationMode parse_mode(const std::string& text) {
  if (text == "two_stage") return EstimationMode::two_stage;
  if (text == "joint") return EstimationMode::joint;
  throw InputError("unknown estimation mode '" + text + "' (expected two_stage or joint)");
}

std::string to_string(MixingProposal proposal) {
  return proposal == MixingProposal::logistic ? "logistic" : "renormalize";
}

MixingProposal parse_mixing_proposal(const std::string& text) {
  if (text == "renormalize") return MixingProposal::renormalize;
  if (text == "logistic") return MixingProposal::logistic;
  throw InputError("unknown mixing proposal '" + text + "' (expected renormalize or logistic)");
}

const char* block_name(std::size_t block) {
  switch (block) {
    case kDegreeBlock: return "degree";
    case kMixingBlock: return "mixing";
    case kOverdispersionBlock: return "overdispersion";
    case kProfileBlock: return "latent_profile";
    default: return "unknown";
  }
}

void SamplerConfig::validate() const {
  if (chains < 1) throw InputError("sampler: chains must be at least 1");
  if (iterations < 1) throw InputError("sampler: iterations must be at least 1");
  if (burn_in >= iterations) throw InputError("sampler: burn_in must be smaller than iterations");
  if (thin < 1) throw InputError("sampler: thin must be at least 1");
  if (adapt_window < 1) throw InputError("sampler: adapt_window must be at least 1");
  for (double s : {jump_scales.degree, jump_scales.mixing, jump_scales.overdispersion, jump_scales.profile})
    if (!(s > 0.0) || !std::isfinite(s)) throw InputError("sampler: jump scales must be positive and finite");
  for (double t : {target_accept, target_accept_mixing})
    if (!(t > 0.0 && t < 1.0)) throw InputError("sampler: target acceptance rates must lie in (0, 1)");
}

LogPosteriorTerms log_posterior_terms(const ModelParams& params, const ArdDataset& data, const ProfileMatrix& profile,
                                      ColumnScope scope, bool use_likelihood) {
  check_param_dims(params, data, profile);
  LogPosteriorTerms t;
  const auto K = data.num_subpops();
  const bool known = scope != ColumnScope::latent;
  const bool latent = scope != ColumnScope::known;
  const auto& hp = params.hyper;

  if (!params.log_degrees.allFinite() || !(hp.sigma_d > 0.0) || !(hp.sigma_h > 0.0) ||
      !(hp.sigma_m.array() > 0.0).all()) {
    t.degree_prior = kNegInf;
    return t;
  }
  for (std::size_t k = 0; k < K; ++k) {
    const bool active = profile.is_latent(k) ? latent : known;
    if (active && !(params.overdispersion[static_cast<Eigen::Index>(k)] > 1.0)) {
      t.overdispersion_prior = kNegInf;
      return t;
    }
  }
  if (latent && (params.latent_profile.array() <= 0.0).any()) {
    t.profile_prior = kNegInf;
    return t;
  }

  const Eigen::MatrixXd h = full_profile(profile, params.latent_profile);
  const Eigen::MatrixXd inner = params.mixing.values() * h;
  for (std::size_t k = 0; k < K; ++k) {
    if (!(profile.is_latent(k) ? latent : known)) continue;
    const double omega = params.overdispersion[static_cast<Eigen::Index>(k)];
    t.overdispersion_prior += -2.0 * std::log(omega);
    if (!use_likelihood) continue;
    const NegBinShape shape(omega);
    for (std::size_t i = 0; i < data.num_respondents(); ++i) {
      const auto y = data(i, k);
      const double mu = params.degree(i) * inner(static_cast<Eigen::Index>(data.ego_group(i)), static_cast<Eigen::Index>(k));
      t.likelihood += shape.unnormalized(y, mu) - log_gamma(static_cast<double>(y) + 1.0);
    }
  }
  if (known) {
    for (Eigen::Index i = 0; i < params.log_degrees.size(); ++i)
      t.degree_prior += normal_logpdf(params.log_degrees[i], hp.mu_d, hp.sigma_d);
    const auto& m = params.mixing.values();
    for (Eigen::Index e = 0; e < m.rows(); ++e)
      for (Eigen::Index a = 0; a < m.cols(); ++a) t.mixing_prior += normal_logpdf(m(e, a), hp.mu_m[e], hp.sigma_m[e]);
  }
  if (latent) {
    for (Eigen::Index j = 0; j < params.latent_profile.cols(); ++j)
      for (Eigen::Index a = 0; a < params.latent_profile.rows(); ++a)
        t.profile_prior += normal_logpdf(std::log(params.latent_profile(a, j)), hp.mu_h, hp.sigma_h);
  }
  return t;
}

double log_posterior(const ModelParams& params, const ArdDataset& data, const ProfileMatrix& profile,
                     ColumnScope scope) {
  return log_posterior_terms(params, data, profile, scope).total();
}

double gibbs_mean_draw(Rng& rng, std::span<const double> x, double sigma) {
  if (x.empty()) throw std::invalid_argument("gibbs_mean_draw: no values");
  const double n = static_cast<double>(x.size());
  return mean(x) + sigma / std::sqrt(n) * std_normal(rng);
}

std::optional<double> gibbs_variance_draw(Rng& rng, std::span<const double> x, double mu) {
  if (x.size() < 2) return std::nullopt;
  double ss = 0.0;
  for (double v : x) ss += (v - mu) * (v - mu);
  const double n = static_cast<double>(x.size());
  if (!(ss > 0.0)) return std::nullopt;
  return scaled_inv_chi2_sample(rng, n - 1.0, ss / n);
}

GibbsMetropolis::GibbsMetropolis(const ArdDataset& data, const ProfileMatrix& profile, SamplerConfig config)
    : data_(data), profile_(profile), config_(std::move(config)) {
  config_.validate();
  check_names(data.subpop_names(), profile.subpop_names(), "responses vs profiles");
  known_ = profile.known_columns();
  latent_ = profile.latent_columns();
  all_.resize(profile.num_subpops());
  std::iota(all_.begin(), all_.end(), std::size_t{0});
  if (known_.empty()) throw ModelError("sampler: at least one known profile column is required");

  members_.assign(data.num_ego_groups(), {});
  for (std::size_t i = 0; i < data.num_respondents(); ++i) members_[data.ego_group(i)].push_back(i);

  const auto& alters = profile.alter_group_names();
  const auto& egos = data.ego_group_names();
  const auto& subs = profile.subpop_names();
  for (const auto& id : data.respondent_ids()) names_.push_back("log_d." + id);
  off_m_ = names_.size();
  for (const auto& e : egos)
    for (const auto& a : alters) names_.push_back("m." + e + "." + a);
  off_omega_ = names_.size();
  for (const auto& s : subs) names_.push_back("omega." + s);
  off_h_ = names_.size();
  for (std::size_t k : latent_)
    for (const auto& a : alters) names_.push_back("h." + a + "." + subs[k]);
  off_hyper_ = names_.size();
  names_.push_back("mu_d");
  names_.push_back("sigma_d");
  for (const auto& e : egos) names_.push_back("mu_m." + e);
  for (const auto& e : egos) names_.push_back("sigma_m." + e);
  if (!latent_.empty()) {
    names_.push_back("mu_h");
    names_.push_back("sigma_h");
  }
}

const std::vector<std::size_t>& GibbsMetropolis::active_columns(ColumnScope scope) const {
  switch (scope) {
    case ColumnScope::known: return known_;
    case ColumnScope::latent: return latent_;
    default: return all_;
  }
}

ChainState GibbsMetropolis::initial_state(const PopulationMargins& margins, std::size_t chain) const {
  check_names(margins.subpop_names, profile_.subpop_names(), "margins vs profiles");
  if (margins.num_alter_groups() != profile_.num_alter_groups())
    throw ModelError("margins and profiles disagree on the number of alter groups");
  Rng rng = make_stream(config_.seed, chain);
  const bool jitter = chain > 0;
  const auto n = static_cast<Eigen::Index>(data_.num_respondents());
  const auto E = static_cast<Eigen::Index>(data_.num_ego_groups());
  const auto A = static_cast<Eigen::Index>(profile_.num_alter_groups());
  const auto H = static_cast<Eigen::Index>(latent_.size());

  ModelParams p;
  const Eigen::VectorXd dhat = scale_up_degree(data_, margins, known_);
  p.log_degrees.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    p.log_degrees[i] = std::log(std::max(dhat[i], 1.0)) + (jitter ? 0.2 * std_normal(rng) : 0.0);

  const Eigen::VectorXd base = margins.random_mixing();
  Eigen::MatrixXd m(E, A);
  for (Eigen::Index e = 0; e < E; ++e)
    for (Eigen::Index a = 0; a < A; ++a) m(e, a) = base[a] * (jitter ? std::exp(0.2 * std_normal(rng)) : 1.0);
  p.mixing = MixingMatrix::normalized(m);

  p.overdispersion.resize(static_cast<Eigen::Index>(all_.size()));
  for (auto& w : p.overdispersion) w = jitter ? 1.0 + 4.0 * std::exp(0.2 * std_normal(rng)) : 5.0;

  const double hbar = profile_.known_submatrix().mean();
  p.latent_profile.resize(A, H);
  for (Eigen::Index j = 0; j < H; ++j)
    for (Eigen::Index a = 0; a < A; ++a) p.latent_profile(a, j) = hbar * (jitter ? std::exp(0.3 * std_normal(rng)) : 1.0);

  auto& hp = p.hyper;
  std::span<const double> ld(p.log_degrees.data(), static_cast<std::size_t>(n));
  hp.mu_d = mean(ld);
  hp.sigma_d = n > 1 ? std::max(sample_sd(ld), 0.1) : 1.0;
  hp.mu_m.resize(E);
  hp.sigma_m.resize(E);
  for (Eigen::Index e = 0; e < E; ++e) {
    const Eigen::VectorXd row = p.mixing.values().row(e).transpose();
    std::span<const double> r(row.data(), static_cast<std::size_t>(A));
    hp.mu_m[e] = mean(r);
    const double sd = A > 1 ? sample_sd(r) : 0.0;
    hp.sigma_m[e] = std::isfinite(sd) ? std::max(sd, 0.01) : 0.01;
  }
  hp.mu_h = std::log(hbar);
  hp.sigma_h = 1.0;
  return make_state(std::move(p), std::move(rng));
}

ChainState GibbsMetropolis::make_state(ModelParams params, Rng rng) const {
  check_param_dims(params, data_, profile_);
  params.validate();
  ChainState s;
  s.params = std::move(params);
  s.rng = std::move(rng);
  s.scope = config_.mode == EstimationMode::joint ? ColumnScope::all : ColumnScope::known;
  const auto& js = config_.jump_scales;
  const auto n = static_cast<Eigen::Index>(data_.num_respondents());
  const auto E = static_cast<Eigen::Index>(data_.num_ego_groups());
  const auto K = static_cast<Eigen::Index>(all_.size());
  const auto A = static_cast<Eigen::Index>(profile_.num_alter_groups());
  const auto H = static_cast<Eigen::Index>(latent_.size());
  s.degree_scale = Eigen::VectorXd::Constant(n, js.degree);
  s.mixing_scale = Eigen::VectorXd::Constant(E, js.mixing);
  s.omega_scale = Eigen::VectorXd::Constant(K, js.overdispersion);
  s.profile_scale = Eigen::MatrixXd::Constant(A, H, js.profile);
  s.degree_window.assign(static_cast<std::size_t>(n), {});
  s.mixing_window.assign(static_cast<std::size_t>(E), {});
  s.omega_window.assign(static_cast<std::size_t>(K), {});
  s.profile_window.assign(static_cast<std::size_t>(A * H), {});
  refresh(s);
  return s;
}

void GibbsMetropolis::refresh(ChainState& s) const {
  s.h_full = full_profile(profile_, s.params.latent_profile);
  s.inner = s.params.mixing.values() * s.h_full;
  s.shapes.clear();
  for (Eigen::Index k = 0; k < s.params.overdispersion.size(); ++k) s.shapes.emplace_back(s.params.overdispersion[k]);
  const auto n = data_.num_respondents();
  s.cell.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(all_.size()));
  for (std::size_t k : all_) {
    const auto kk = static_cast<Eigen::Index>(k);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double mu = std::exp(s.params.log_degrees[ii]) * s.inner(static_cast<Eigen::Index>(data_.ego_group(i)), kk);
      s.cell(ii, kk) = config_.use_likelihood ? s.shapes[k].unnormalized(data_(i, k), mu) : 0.0;
    }
  }
}

bool GibbsMetropolis::step_degree(ChainState& s, std::size_t i) const {
  const auto ii = static_cast<Eigen::Index>(i);
  const auto& cols = active_columns(s.scope == ColumnScope::latent ? ColumnScope::known : s.scope);
  const auto& hp = s.params.hyper;
  const double cur = s.params.log_degrees[ii];
  const double prop = cur + s.degree_scale[ii] * std_normal(s.rng);
  const double d = std::exp(prop);
  const auto e = static_cast<Eigen::Index>(data_.ego_group(i));

  double delta = normal_logpdf(prop, hp.mu_d, hp.sigma_d) - normal_logpdf(cur, hp.mu_d, hp.sigma_d);
  s.scratch.resize(cols.size());
  if (config_.use_likelihood) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto k = cols[c];
      const auto kk = static_cast<Eigen::Index>(k);
      s.scratch[c] = s.shapes[k].unnormalized(data_(i, k), d * s.inner(e, kk));
      delta += s.scratch[c] - s.cell(ii, kk);
    }
  }
  const bool ok = metropolis_accept(s.rng, delta);
  if (ok) {
    s.params.log_degrees[ii] = prop;
    if (config_.use_likelihood)
      for (std::size_t c = 0; c < cols.size(); ++c) s.cell(ii, static_cast<Eigen::Index>(cols[c])) = s.scratch[c];
  }
  s.degree_window[i].record(ok);
  if (s.counting) s.ledger[kDegreeBlock].record(ok);
  return ok;
}

bool GibbsMetropolis::step_mixing_row(ChainState& s, std::size_t e) const {
  const auto ee = static_cast<Eigen::Index>(e);
  const auto A = static_cast<Eigen::Index>(profile_.num_alter_groups());
  const auto& cols = active_columns(s.scope == ColumnScope::latent ? ColumnScope::known : s.scope);
  const auto& hp = s.params.hyper;
  const Eigen::VectorXd cur = s.params.mixing.values().row(ee).transpose();
  const double scale = s.mixing_scale[ee];

  auto reject = [&] {
    s.mixing_window[e].record(false);
    if (s.counting) s.ledger[kMixingBlock].record(false);
    return false;
  };

  Eigen::VectorXd prop(A);
  double delta = 0.0;
  if (config_.mixing_proposal == MixingProposal::renormalize) {
    // Perturb every entry, then rescale the row back onto the simplex.
    for (Eigen::Index a = 0; a < A; ++a) prop[a] = cur[a] + scale * std_normal(s.rng);
    if ((prop.array() <= 0.0).any()) return reject();
    prop /= prop.sum();
  } else {
    for (Eigen::Index a = 0; a < A; ++a) prop[a] = std::log(cur[a]) + scale * std_normal(s.rng);
    prop = (prop.array() - prop.maxCoeff()).exp();
    prop /= prop.sum();
    if ((prop.array() <= 0.0).any()) return reject();
    delta += prop.array().log().sum() - cur.array().log().sum();
  }

  for (Eigen::Index a = 0; a < A; ++a)
    delta += normal_logpdf(prop[a], hp.mu_m[ee], hp.sigma_m[ee]) - normal_logpdf(cur[a], hp.mu_m[ee], hp.sigma_m[ee]);

  const Eigen::RowVectorXd inner_new = prop.transpose() * s.h_full;
  const auto& members = members_[e];
  if (config_.use_likelihood) {
    s.scratch.resize(members.size() * cols.size());
    std::size_t at = 0;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto k = cols[c];
      const auto kk = static_cast<Eigen::Index>(k);
      for (std::size_t i : members) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double v = s.shapes[k].unnormalized(data_(i, k), std::exp(s.params.log_degrees[ii]) * inner_new[kk]);
        s.scratch[at++] = v;
        delta += v - s.cell(ii, kk);
      }
    }
  }
  const bool ok = metropolis_accept(s.rng, delta);
  if (ok) {
    s.params.mixing.set_row(e, prop);
    s.inner.row(ee) = inner_new;
    if (config_.use_likelihood) {
      std::size_t at = 0;
      for (std::size_t k : cols)
        for (std::size_t i : members) s.cell(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = s.scratch[at++];
    }
  }
  s.mixing_window[e].record(ok);
  if (s.counting) s.ledger[kMixingBlock].record(ok);
  return ok;
}

bool GibbsMetropolis::step_overdispersion(ChainState& s, std::size_t k) const {
  const auto kk = static_cast<Eigen::Index>(k);
  const double cur = s.params.overdispersion[kk];
  const double prop = cur + s.omega_scale[kk] * std_normal(s.rng);
  bool ok = false;
  if (prop > 1.0 && std::isfinite(prop)) {
    const NegBinShape shape(prop);
    double delta = -2.0 * std::log(prop) + 2.0 * std::log(cur);
    const auto n = data_.num_respondents();
    if (config_.use_likelihood) {
      s.scratch.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double mu = std::exp(s.params.log_degrees[ii]) * s.inner(static_cast<Eigen::Index>(data_.ego_group(i)), kk);
        s.scratch[i] = shape.unnormalized(data_(i, k), mu);
        delta += s.scratch[i] - s.cell(ii, kk);
      }
    }
    ok = metropolis_accept(s.rng, delta);
    if (ok) {
      s.params.overdispersion[kk] = prop;
      s.shapes[k] = shape;
      if (config_.use_likelihood)
        for (std::size_t i = 0; i < n; ++i) s.cell(static_cast<Eigen::Index>(i), kk) = s.scratch[i];
    }
  }
  s.omega_window[k].record(ok);
  if (s.counting) s.ledger[kOverdispersionBlock].record(ok);
  return ok;
}

bool GibbsMetropolis::step_latent_profile(ChainState& s, std::size_t a, std::size_t j) const {
  const auto aa = static_cast<Eigen::Index>(a);
  const auto jj = static_cast<Eigen::Index>(j);
  const std::size_t k = latent_.at(j);
  const auto kk = static_cast<Eigen::Index>(k);
  const auto& hp = s.params.hyper;
  const double h = s.h_full(aa, kk);
  const double cur = std::log(h);
  const double prop = cur + s.profile_scale(aa, jj) * std_normal(s.rng);
  const double hn = std::exp(prop);

  double delta = normal_logpdf(prop, hp.mu_h, hp.sigma_h) - normal_logpdf(cur, hp.mu_h, hp.sigma_h);
  bool ok = false;
  if (hn > 0.0 && std::isfinite(hn)) {
    const auto& m = s.params.mixing.values();
    Eigen::VectorXd col = s.h_full.col(kk);
    col[aa] = hn;
    const Eigen::VectorXd inner_new = m * col;
    const auto n = data_.num_respondents();
    if (config_.use_likelihood) {
      s.scratch.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double mu = std::exp(s.params.log_degrees[ii]) * inner_new[static_cast<Eigen::Index>(data_.ego_group(i))];
        s.scratch[i] = s.shapes[k].unnormalized(data_(i, k), mu);
        delta += s.scratch[i] - s.cell(ii, kk);
      }
    }
    ok = metropolis_accept(s.rng, delta);
    if (ok) {
      s.h_full(aa, kk) = hn;
      s.params.latent_profile(aa, jj) = hn;
      s.inner.col(kk) = inner_new;
      if (config_.use_likelihood)
        for (std::size_t i = 0; i < n; ++i) s.cell(static_cast<Eigen::Index>(i), kk) = s.scratch[i];
    }
  }
  s.profile_window[j * profile_.num_alter_groups() + a].record(ok);
  if (s.counting) s.ledger[kProfileBlock].record(ok);
  return ok;
}

void GibbsMetropolis::step_degree_mixing_hyper(ChainState& s) const {
  if (!config_.update_hyperparameters) return;
  auto& hp = s.params.hyper;
  const auto& ld = s.params.log_degrees;
  std::span<const double> x(ld.data(), static_cast<std::size_t>(ld.size()));
  hp.mu_d = gibbs_mean_draw(s.rng, x, hp.sigma_d);
  if (const auto v = gibbs_variance_draw(s.rng, x, hp.mu_d)) hp.sigma_d = std::sqrt(*v);

  const auto& m = s.params.mixing.values();
  for (Eigen::Index e = 0; e < m.rows(); ++e) {
    const Eigen::VectorXd row = m.row(e).transpose();
    std::span<const double> r(row.data(), static_cast<std::size_t>(row.size()));
    hp.mu_m[e] = gibbs_mean_draw(s.rng, r, hp.sigma_m[e]);
    if (const auto v = gibbs_variance_draw(s.rng, r, hp.mu_m[e])) hp.sigma_m[e] = std::sqrt(*v);
  }
}

void GibbsMetropolis::step_profile_hyper(ChainState& s) const {
  if (!config_.update_hyperparameters || latent_.empty()) return;
  auto& hp = s.params.hyper;
  const Eigen::ArrayXXd logh = s.params.latent_profile.array().log();
  std::span<const double> x(logh.data(), static_cast<std::size_t>(logh.size()));
  hp.mu_h = gibbs_mean_draw(s.rng, x, hp.sigma_h);
  // Fewer than two masked entries leaves sigma_h where it is.
  if (const auto v = gibbs_variance_draw(s.rng, x, hp.mu_h)) hp.sigma_h = std::sqrt(*v);
}

void GibbsMetropolis::step_hyperparams(ChainState& s) const {
  if (s.scope != ColumnScope::latent) step_degree_mixing_hyper(s);
  if (s.scope != ColumnScope::known) step_profile_hyper(s);
}

void GibbsMetropolis::sweep(ChainState& s) const {
  if (s.scope != ColumnScope::latent) {
    for (std::size_t i = 0; i < data_.num_respondents(); ++i) step_degree(s, i);
    for (std::size_t e = 0; e < data_.num_ego_groups(); ++e) step_mixing_row(s, e);
    step_degree_mixing_hyper(s);
    for (std::size_t k : known_) step_overdispersion(s, k);
  }
  if (s.scope != ColumnScope::known) {
    for (std::size_t j = 0; j < latent_.size(); ++j)
      for (std::size_t a = 0; a < profile_.num_alter_groups(); ++a) step_latent_profile(s, a, j);
    step_profile_hyper(s);
    for (std::size_t k : latent_) step_overdispersion(s, k);
  }
}

void GibbsMetropolis::adapt(ChainState& s) const {
  auto tune = [](double& scale, AcceptanceCounter& w, double target) {
    if (w.proposed == 0) return;
    scale = std::clamp(scale * std::exp(kAdaptGain * (w.rate() - target)), kMinScale, kMaxScale);
    w = {};
  };
  const double t = config_.target_accept;
  for (std::size_t i = 0; i < s.degree_window.size(); ++i)
    tune(s.degree_scale[static_cast<Eigen::Index>(i)], s.degree_window[i], t);
  for (std::size_t e = 0; e < s.mixing_window.size(); ++e)
    tune(s.mixing_scale[static_cast<Eigen::Index>(e)], s.mixing_window[e], config_.target_accept_mixing);
  for (std::size_t k = 0; k < s.omega_window.size(); ++k)
    tune(s.omega_scale[static_cast<Eigen::Index>(k)], s.omega_window[k], t);
  const auto A = profile_.num_alter_groups();
  for (std::size_t idx = 0; idx < s.profile_window.size(); ++idx)
    tune(s.profile_scale(static_cast<Eigen::Index>(idx % A), static_cast<Eigen::Index>(idx / A)), s.profile_window[idx], t);
}

bool GibbsMetropolis::is_stage_two_parameter(std::size_t index) const {
  if (index >= off_omega_ && index < off_h_) return profile_.is_latent(index - off_omega_);
  if (index >= off_h_ && index < off_hyper_) return true;
  return !latent_.empty() && index + 2 >= names_.size();
}

void GibbsMetropolis::flatten(const ChainState& s, std::span<double> row, ColumnScope part) const {
  if (row.size() != names_.size()) throw std::invalid_argument("flatten: row has the wrong length");
  std::vector<double> full(names_.size());
  const auto& p = s.params;
  std::size_t at = 0;
  for (Eigen::Index i = 0; i < p.log_degrees.size(); ++i) full[at++] = p.log_degrees[i];
  const auto& m = p.mixing.values();
  for (Eigen::Index e = 0; e < m.rows(); ++e)
    for (Eigen::Index a = 0; a < m.cols(); ++a) full[at++] = m(e, a);
  for (Eigen::Index k = 0; k < p.overdispersion.size(); ++k) full[at++] = p.overdispersion[k];
  for (Eigen::Index j = 0; j < p.latent_profile.cols(); ++j)
    for (Eigen::Index a = 0; a < p.latent_profile.rows(); ++a) full[at++] = p.latent_profile(a, j);
  full[at++] = p.hyper.mu_d;
  full[at++] = p.hyper.sigma_d;
  for (Eigen::Index e = 0; e < p.hyper.mu_m.size(); ++e) full[at++] = p.hyper.mu_m[e];
  for (Eigen::Index e = 0; e < p.hyper.sigma_m.size(); ++e) full[at++] = p.hyper.sigma_m[e];
  if (!latent_.empty()) {
    full[at++] = p.hyper.mu_h;
    full[at++] = p.hyper.sigma_h;
  }
  for (std::size_t idx = 0; idx < full.size(); ++idx) {
    const bool two = is_stage_two_parameter(idx);
    if (part == ColumnScope::all || (part == ColumnScope::latent) == two) row[idx] = full[idx];
  }
}

std::optional<std::size_t> PosteriorDraws::index(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

std::vector<double> PosteriorDraws::pooled(std::size_t param) const {
  std::vector<double> out;
  for (const auto& c : chains) {
    const auto col = c.col(static_cast<Eigen::Index>(param));
    out.insert(out.end(), col.data(), col.data() + col.size());
  }
  return out;
}

std::vector<std::vector<double>> PosteriorDraws::per_chain(std::size_t param) const {
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) {
    const auto col = c.col(static_cast<Eigen::Index>(param));
    out.emplace_back(col.data(), col.data() + col.size());
  }
  return out;
}

std::vector<ParameterSummary> summarize_draws(const PosteriorDraws& draws) {
  std::vector<ParameterSummary> out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t p = 0; p < draws.names.size(); ++p) {
    ParameterSummary s;
    s.name = draws.names[p];
    auto pooled = draws.pooled(p);
    s.mean = mean(pooled);
    s.sd = sample_sd(pooled);
    std::sort(pooled.begin(), pooled.end());
    for (std::size_t q = 0; q < kQuantileLevels.size(); ++q) s.quantiles[q] = quantile_sorted(pooled, kQuantileLevels[q]);
    const auto chains = draws.per_chain(p);
    if (!chains.empty() && chains.front().size() >= 4) {
      s.rhat = split_rhat(chains);
      s.ess = effective_sample_size(chains);
    } else {
      s.rhat = nan;
      s.ess = nan;
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

void run_stage(const GibbsMetropolis& g, ChainState& s, ColumnScope scope, ColumnScope part, Eigen::MatrixXd& out,
               std::vector<std::size_t>& iters) {
  const auto& cfg = g.config();
  s.scope = scope;
  g.refresh(s);
  for (auto* w : {&s.degree_window, &s.mixing_window, &s.omega_window, &s.profile_window})
    for (auto& c : *w) c = {};
  s.counting = cfg.burn_in == 0;
  std::vector<double> row(static_cast<std::size_t>(out.cols()));
  Eigen::Index r = 0;
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    g.sweep(s);
    if (t < cfg.burn_in) {
      if ((t + 1) % cfg.adapt_window == 0) g.adapt(s);
      if (t + 1 == cfg.burn_in) s.counting = true;
      continue;
    }
    if ((t - cfg.burn_in) % cfg.thin != 0) continue;
    std::copy(out.row(r).begin(), out.row(r).end(), row.begin());
    g.flatten(s, row, part);
    out.row(r) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));
    iters[static_cast<std::size_t>(r)] = t + 1;
    ++r;
  }
}

// Per-chain stage-one posterior means: degrees averaged on the natural scale,
// mixing rows averaged and renormalized, known omega' averaged.
void freeze_stage_one(const GibbsMetropolis& g, ChainState& s, const Eigen::MatrixXd& out) {
  auto& p = s.params;
  const auto n = p.log_degrees.size();
  for (Eigen::Index i = 0; i < n; ++i) p.log_degrees[i] = std::log(out.col(i).array().exp().mean());
  const auto E = static_cast<Eigen::Index>(p.mixing.num_ego_groups());
  const auto A = static_cast<Eigen::Index>(p.mixing.num_alter_groups());
  Eigen::MatrixXd m(E, A);
  for (Eigen::Index e = 0; e < E; ++e)
    for (Eigen::Index a = 0; a < A; ++a) m(e, a) = out.col(n + e * A + a).mean();
  p.mixing = MixingMatrix::normalized(m);
  const Eigen::Index off_omega = n + E * A;
  for (Eigen::Index k = 0; k < p.overdispersion.size(); ++k)
    if (!g.is_stage_two_parameter(static_cast<std::size_t>(off_omega + k)))
      p.overdispersion[k] = out.col(off_omega + k).mean();
}

}  // namespace

McmcResult run(const SamplerConfig& config, const ArdDataset& data, const ProfileMatrix& profile,
               const PopulationMargins& margins, const ModelParams* init) {
  config.validate();
  check_names(data.subpop_names(), profile.subpop_names(), "responses vs profiles");
  check_names(margins.subpop_names, profile.subpop_names(), "margins vs profiles");
  if (margins.num_alter_groups() != profile.num_alter_groups())
    throw ModelError("margins and profiles disagree on the number of alter groups");

  McmcResult result;
  result.config = config;
  result.rank = rank_report(profile.known_submatrix());
  if (result.rank.deficient) throw IdentifiabilityError(result.rank.describe());
  for (std::size_t k : profile.known_columns()) result.known_columns.push_back(profile.subpop_names()[k]);
  for (std::size_t k : profile.latent_columns()) result.latent_columns.push_back(profile.subpop_names()[k]);

  const GibbsMetropolis sampler(data, profile, config);
  if (init) check_param_dims(*init, data, profile);

  const auto P = static_cast<Eigen::Index>(sampler.parameter_names().size());
  const auto R = static_cast<Eigen::Index>((config.iterations - config.burn_in + config.thin - 1) / config.thin);
  auto& draws = result.draws;
  draws.names = sampler.parameter_names();
  draws.chains.assign(config.chains, Eigen::MatrixXd::Zero(R, P));
  draws.iterations.assign(config.chains, std::vector<std::size_t>(static_cast<std::size_t>(R)));
  draws.acceptance.assign(config.chains, {});

  parallel_for(config.chains, worker_count(config.workers), [&](std::size_t c) {
    ChainState s = init ? sampler.make_state(*init, make_stream(config.seed, c)) : sampler.initial_state(margins, c);
    auto& out = draws.chains[c];
    auto& iters = draws.iterations[c];
    if (config.mode == EstimationMode::joint) {
      run_stage(sampler, s, ColumnScope::all, ColumnScope::all, out, iters);
    } else {
      run_stage(sampler, s, ColumnScope::known, ColumnScope::known, out, iters);
      if (!profile.latent_columns().empty()) {
        freeze_stage_one(sampler, s, out);
        run_stage(sampler, s, ColumnScope::latent, ColumnScope::latent, out, iters);
      }
    }
    draws.acceptance[c] = s.ledger;
  });

  result.summary = summarize_draws(draws);
  return result;
}

}  // namespace ardprof
