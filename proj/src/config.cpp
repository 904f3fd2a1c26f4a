#include "ardprof/config.hpp"

#include <set>

#include "ardprof/error.hpp"

namespace ardprof {

namespace {

void only_keys(const Json& j, const std::string& section, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw InputError("config: '" + section + "' must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw InputError("config: unknown key '" + key + "' in '" + section + "'");
}

template <class T>
T get_as(const Json& j, const std::string& key, const std::string& section) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError("config: '" + section + "." + key + "' has the wrong type");
  }
}

std::size_t get_count(const Json& j, const std::string& key, const std::string& section) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw InputError("config: '" + section + "." + key + "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

template <class Fn>
void maybe(const Json& j, const char* key, Fn&& fn) {
  if (j.contains(key)) fn(key);
}

}  // namespace

ProjectConfig parse_project_config(const Json& j, const std::string& source) {
  only_keys(j, source, {"responses", "profiles", "margins", "out", "latent", "seed", "sampler", "simple", "simulate", "study"});
  ProjectConfig c;
  for (const char* key : {"responses", "profiles", "margins", "out"}) {
    if (!j.contains(key)) continue;
    auto v = get_as<std::string>(j, key, source);
    if (key == std::string("responses")) c.responses = v;
    else if (key == std::string("profiles")) c.profiles = v;
    else if (key == std::string("margins")) c.margins = v;
    else c.out = v;
  }
  if (j.contains("latent")) c.latent = get_as<std::vector<std::string>>(j, "latent", source);
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      throw InputError("config: 'seed' must be a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (j.contains("sampler")) c.sampler = j.at("sampler");
  if (j.contains("simple")) c.simple = j.at("simple");
  if (j.contains("simulate")) c.simulate = j.at("simulate");
  if (j.contains("study")) c.study = j.at("study");
  // Validate sections early so errors name the config file.
  SamplerConfig sc;
  apply_sampler_json(c.sampler, sc);
  SimpleOptions so;
  apply_simple_json(c.simple, so);
  WorldOptions wo;
  apply_world_json(c.simulate, wo);
  only_keys(c.study, "study", {"reps", "regimes"});
  if (c.study.contains("reps")) get_count(c.study, "reps", "study");
  if (c.study.contains("regimes")) get_as<std::vector<std::string>>(c.study, "regimes", "study");
  return c;
}

ProjectConfig load_project_config(const std::string& path) { return parse_project_config(read_json(path), path); }

void apply_sampler_json(const Json& j, SamplerConfig& c) {
  const std::string s = "sampler";
  only_keys(j, s, {"chains", "iterations", "burn_in", "thin", "adapt_window", "target_accept", "target_accept_mixing",
                   "mode", "mixing_proposal", "jump_scales", "workers"});
  maybe(j, "chains", [&](auto k) { c.chains = get_count(j, k, s); });
  maybe(j, "iterations", [&](auto k) { c.iterations = get_count(j, k, s); });
  maybe(j, "burn_in", [&](auto k) { c.burn_in = get_count(j, k, s); });
  maybe(j, "thin", [&](auto k) { c.thin = get_count(j, k, s); });
  maybe(j, "adapt_window", [&](auto k) { c.adapt_window = get_count(j, k, s); });
  maybe(j, "workers", [&](auto k) { c.workers = get_count(j, k, s); });
  maybe(j, "target_accept", [&](auto k) { c.target_accept = get_as<double>(j, k, s); });
  maybe(j, "target_accept_mixing", [&](auto k) { c.target_accept_mixing = get_as<double>(j, k, s); });
  maybe(j, "mode", [&](auto k) { c.mode = parse_mode(get_as<std::string>(j, k, s)); });
  maybe(j, "mixing_proposal", [&](auto k) { c.mixing_proposal = parse_mixing_proposal(get_as<std::string>(j, k, s)); });
  if (j.contains("jump_scales")) {
    const auto& js = j.at("jump_scales");
    const std::string sj = "sampler.jump_scales";
    only_keys(js, sj, {"degree", "mixing", "overdispersion", "profile"});
    maybe(js, "degree", [&](auto k) { c.jump_scales.degree = get_as<double>(js, k, sj); });
    maybe(js, "mixing", [&](auto k) { c.jump_scales.mixing = get_as<double>(js, k, sj); });
    maybe(js, "overdispersion", [&](auto k) { c.jump_scales.overdispersion = get_as<double>(js, k, sj); });
    maybe(js, "profile", [&](auto k) { c.jump_scales.profile = get_as<double>(js, k, sj); });
  }
}

void apply_simple_json(const Json& j, SimpleOptions& o) {
  const std::string s = "simple";
  only_keys(j, s, {"mixing", "weighting", "bootstrap", "em_max_iterations", "em_tolerance", "scaled_down_tolerance"});
  maybe(j, "mixing", [&](auto k) {
    const auto v = get_as<std::string>(j, k, s);
    if (v == "ratio") o.mixing = MixingMethod::ratio;
    else if (v == "em") o.mixing = MixingMethod::em;
    else throw InputError("config: simple.mixing must be 'ratio' or 'em'");
  });
  maybe(j, "weighting", [&](auto k) {
    const auto v = get_as<std::string>(j, k, s);
    if (v == "unweighted") o.weighting = EgoWeighting::unweighted;
    else if (v == "degree") o.weighting = EgoWeighting::degree;
    else throw InputError("config: simple.weighting must be 'unweighted' or 'degree'");
  });
  maybe(j, "bootstrap", [&](auto k) { o.bootstrap = get_count(j, k, s); });
  maybe(j, "em_max_iterations", [&](auto k) { o.em.max_iterations = get_count(j, k, s); });
  maybe(j, "em_tolerance", [&](auto k) { o.em.tolerance = get_as<double>(j, k, s); });
  maybe(j, "scaled_down_tolerance", [&](auto k) { o.scaled_down_tolerance = get_as<double>(j, k, s); });
}

void apply_world_json(const Json& j, WorldOptions& o) {
  const std::string s = "simulate";
  only_keys(j, s, {"regime", "n", "known", "latent", "mean_degree", "sigma_d", "omega", "latent_log_mean",
                   "latent_log_sd", "known_fraction"});
  maybe(j, "regime", [&](auto k) { o.regime = parse_regime(get_as<std::string>(j, k, s)); });
  maybe(j, "n", [&](auto k) { o.respondents = get_count(j, k, s); });
  maybe(j, "known", [&](auto k) { o.known_columns = get_count(j, k, s); });
  maybe(j, "latent", [&](auto k) { o.latent_columns = get_count(j, k, s); });
  maybe(j, "mean_degree", [&](auto k) { o.mean_degree = get_as<double>(j, k, s); });
  maybe(j, "sigma_d", [&](auto k) { o.sigma_d = get_as<double>(j, k, s); });
  maybe(j, "omega", [&](auto k) { o.omega = get_as<double>(j, k, s); });
  maybe(j, "latent_log_mean", [&](auto k) { o.latent_log_mean = get_as<double>(j, k, s); });
  maybe(j, "latent_log_sd", [&](auto k) { o.latent_log_sd = get_as<double>(j, k, s); });
  maybe(j, "known_fraction", [&](auto k) { o.regime_options.known_fraction = get_as<double>(j, k, s); });
}

Json sampler_to_json(const SamplerConfig& c) {
  return {{"chains", c.chains},
          {"iterations", c.iterations},
          {"burn_in", c.burn_in},
          {"thin", c.thin},
          {"adapt_window", c.adapt_window},
          {"target_accept", c.target_accept},
          {"target_accept_mixing", c.target_accept_mixing},
          {"mode", to_string(c.mode)},
          {"mixing_proposal", to_string(c.mixing_proposal)},
          {"jump_scales",
           {{"degree", c.jump_scales.degree},
            {"mixing", c.jump_scales.mixing},
            {"overdispersion", c.jump_scales.overdispersion},
            {"profile", c.jump_scales.profile}}}};
}

Json simple_to_json(const SimpleOptions& o) {
  return {{"mixing", o.mixing == MixingMethod::em ? "em" : "ratio"},
          {"weighting", o.weighting == EgoWeighting::degree ? "degree" : "unweighted"},
          {"bootstrap", o.bootstrap},
          {"em_max_iterations", o.em.max_iterations},
          {"em_tolerance", o.em.tolerance},
          {"scaled_down_tolerance", o.scaled_down_tolerance}};
}

Json world_to_json(const WorldOptions& o) {
  return {{"regime", to_string(o.regime)},
          {"n", o.respondents},
          {"known", o.known_columns},
          {"latent", o.latent_columns},
          {"mean_degree", o.mean_degree},
          {"sigma_d", o.sigma_d},
          {"omega", o.omega},
          {"latent_log_mean", o.latent_log_mean},
          {"latent_log_sd", o.latent_log_sd},
          {"known_fraction", o.regime_options.known_fraction}};
}

}  // namespace ardprof
