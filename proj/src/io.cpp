#include "ardprof/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "ardprof/csv.hpp"
#include "ardprof/error.hpp"

namespace ardprof {

namespace fs = std::filesystem;

namespace {

std::string where(const std::string& path, std::size_t line, const std::string& column) {
  return path + ": line " + std::to_string(line) + ", column '" + column + "'";
}

void expect_header(const CsvTable& t, const std::string& path, const std::vector<std::string>& leading) {
  if (t.header.size() < leading.size())
    throw InputError(path + ": header must start with " + leading.front() + (leading.size() > 1 ? "," + leading[1] : ""));
  for (std::size_t j = 0; j < leading.size(); ++j)
    if (t.header[j] != leading[j])
      throw InputError(path + ": header column " + std::to_string(j + 1) + " must be '" + leading[j] + "', found '" +
                       t.header[j] + "'");
  std::set<std::string> seen;
  for (const auto& h : t.header) {
    if (h.empty()) throw InputError(path + ": empty column name in header");
    if (!seen.insert(h).second) throw InputError(path + ": duplicate column '" + h + "'");
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw InputError("failed while writing '" + path + "'");
}

double read_double(const std::string& text, const std::string& path, std::size_t line, const std::string& col) {
  double v = 0.0;
  if (!parse_double(text, v)) throw InputError(where(path, line, col) + ": '" + text + "' is not a number");
  return v;
}

}  // namespace

ArdDataset load_responses(const std::string& path) {
  const CsvTable t = read_csv(path);
  expect_header(t, path, {"respondent_id", "ego_group"});
  if (t.header.size() < 3) throw InputError(path + ": no subpopulation columns");
  if (t.rows.empty()) throw InputError(path + ": no respondents");
  const std::size_t n = t.rows.size();
  const std::size_t K = t.header.size() - 2;

  std::set<std::string> egos;
  for (std::size_t r = 0; r < n; ++r) {
    if (t.rows[r][1].empty()) throw InputError(where(path, t.lines[r], "ego_group") + ": empty ego group");
    egos.insert(t.rows[r][1]);
  }
  const std::vector<std::string> ego_names(egos.begin(), egos.end());

  std::vector<std::string> ids;
  std::vector<std::size_t> ego;
  CountMatrix y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(K));
  std::set<std::string> seen;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = t.rows[r];
    if (row[0].empty()) throw InputError(where(path, t.lines[r], "respondent_id") + ": empty respondent id");
    if (!seen.insert(row[0]).second)
      throw InputError(where(path, t.lines[r], "respondent_id") + ": duplicate respondent id '" + row[0] + "'");
    ids.push_back(row[0]);
    ego.push_back(static_cast<std::size_t>(std::lower_bound(ego_names.begin(), ego_names.end(), row[1]) - ego_names.begin()));
    for (std::size_t k = 0; k < K; ++k) {
      std::int64_t v = 0;
      const auto& col = t.header[k + 2];
      if (!parse_int(row[k + 2], v))
        throw InputError(where(path, t.lines[r], col) + ": '" + row[k + 2] + "' is not an integer count");
      if (v < 0) throw InputError(where(path, t.lines[r], col) + ": negative count " + row[k + 2]);
      y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v;
    }
  }
  std::vector<std::string> subs(t.header.begin() + 2, t.header.end());
  return ArdDataset(std::move(ids), std::move(ego), std::move(y), std::move(subs), ego_names);
}

ProfileMatrix load_profiles(const std::string& path) {
  const CsvTable t = read_csv(path);
  expect_header(t, path, {"alter_group"});
  if (t.header.size() < 2) throw InputError(path + ": no subpopulation columns");
  if (t.rows.empty()) throw InputError(path + ": no alter groups");
  const std::size_t A = t.rows.size();
  const std::size_t K = t.header.size() - 1;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(A), static_cast<Eigen::Index>(K));
  std::vector<bool> latent(K, false);
  std::vector<std::string> alters;
  std::set<std::string> seen;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& col = t.header[k + 1];
    const bool first_latent = t.rows[0][k + 1] == "?";
    latent[k] = first_latent;
    for (std::size_t a = 0; a < A; ++a) {
      const auto& cell = t.rows[a][k + 1];
      if ((cell == "?") != first_latent)
        throw InputError(where(path, t.lines[a], col) + ": latent mask must be constant within a column");
      if (first_latent) continue;
      const double v = read_double(cell, path, t.lines[a], col);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw InputError(where(path, t.lines[a], col) + ": known profile entries must lie in [0, 1]");
      h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) = v;
    }
  }
  for (std::size_t a = 0; a < A; ++a) {
    const auto& name = t.rows[a][0];
    if (name.empty()) throw InputError(where(path, t.lines[a], "alter_group") + ": empty alter group name");
    if (!seen.insert(name).second)
      throw InputError(where(path, t.lines[a], "alter_group") + ": duplicate alter group '" + name + "'");
    alters.push_back(name);
  }
  std::vector<std::string> subs(t.header.begin() + 1, t.header.end());
  return ProfileMatrix(std::move(alters), std::move(subs), std::move(h), std::move(latent));
}

PopulationMargins load_margins(const std::string& path) {
  const CsvTable t = read_csv(path);
  expect_header(t, path, {"level", "name", "count"});
  if (t.header.size() != 3) throw InputError(path + ": expected exactly the columns level,name,count");
  PopulationMargins m;
  bool have_total = false;
  std::map<std::string, std::map<std::string, std::int64_t>> cross;  // subpop -> alter -> count
  std::vector<std::pair<std::string, std::size_t>> cross_order;
  std::set<std::string> alters_seen, subs_seen;

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.lines[r];
    std::int64_t count = 0;
    if (!parse_int(row[2], count)) throw InputError(where(path, line, "count") + ": '" + row[2] + "' is not an integer");
    if (count < 0) throw InputError(where(path, line, "count") + ": negative count");
    const auto& level = row[0];
    const auto& name = row[1];
    if (level == "total") {
      if (have_total) throw InputError(where(path, line, "level") + ": total given twice");
      m.total = count;
      have_total = true;
    } else if (level == "alter") {
      if (!alters_seen.insert(name).second) throw InputError(where(path, line, "name") + ": duplicate alter group '" + name + "'");
      m.alter_group_names.push_back(name);
      m.alter_group_sizes.push_back(count);
    } else if (level == "subpop") {
      if (!subs_seen.insert(name).second) throw InputError(where(path, line, "name") + ": duplicate subpopulation '" + name + "'");
      m.subpop_names.push_back(name);
      m.subpop_sizes.emplace_back(count);
    } else if (level == "cross") {
      const auto bar = name.find('|');
      if (bar == std::string::npos || name.find('|', bar + 1) != std::string::npos)
        throw InputError(where(path, line, "name") + ": cross rows are named alter|subpop");
      const std::string alter = name.substr(0, bar), sub = name.substr(bar + 1);
      auto& col = cross[sub];
      if (!col.emplace(alter, count).second)
        throw InputError(where(path, line, "name") + ": duplicate cross count '" + name + "'");
      cross_order.emplace_back(name, line);
    } else {
      throw InputError(where(path, line, "level") + ": unknown level '" + level + "' (total, alter, subpop or cross)");
    }
  }
  if (!have_total) throw InputError(path + ": no total row");

  m.cross_counts.assign(m.subpop_names.size(), std::nullopt);
  for (const auto& [sub, col] : cross) {
    const auto k = m.subpop_index(sub);
    if (!k) throw InputError(path + ": cross counts for unknown subpopulation '" + sub + "'");
    std::vector<std::int64_t> v(m.alter_group_names.size(), 0);
    std::vector<bool> got(v.size(), false);
    for (const auto& [alter, count] : col) {
      const auto it = std::find(m.alter_group_names.begin(), m.alter_group_names.end(), alter);
      if (it == m.alter_group_names.end())
        throw InputError(path + ": cross counts for unknown alter group '" + alter + "'");
      const auto a = static_cast<std::size_t>(it - m.alter_group_names.begin());
      v[a] = count;
      got[a] = true;
    }
    if (std::find(got.begin(), got.end(), false) != got.end())
      throw InputError(path + ": cross counts for '" + sub + "' do not cover every alter group");
    m.cross_counts[*k] = std::move(v);
  }
  m.validate();
  return m;
}

void check_profile_margins(const ProfileMatrix& profile, const PopulationMargins& margins, double tolerance) {
  if (profile.alter_group_names() != margins.alter_group_names)
    throw InputError("profiles and margins list different alter groups (or in a different order)");
  for (std::size_t k = 0; k < profile.num_subpops(); ++k) {
    if (profile.is_latent(k)) continue;
    const auto& name = profile.subpop_names()[k];
    const auto mk = margins.subpop_index(name);
    if (!mk || !margins.has_cross_counts(*mk)) continue;
    const auto& col = *margins.cross_counts[*mk];
    for (std::size_t a = 0; a < profile.num_alter_groups(); ++a) {
      const double expect = static_cast<double>(col[a]) / static_cast<double>(margins.alter_group_sizes[a]);
      const double got = profile(a, k);
      if (std::abs(expect - got) > tolerance) {
        std::ostringstream msg;
        msg << std::setprecision(17) << "profile h('" << profile.alter_group_names()[a] << "', '" << name
            << "') = " << got << " but N_ak / N_a = " << expect;
        throw InputError(msg.str());
      }
    }
  }
}

FitInputs load_inputs(const std::string& responses, const std::string& profiles, const std::string& margins_path,
                      const std::vector<std::string>& latent) {
  for (const auto* p : {&responses, &profiles, &margins_path})
    if (!fs::exists(*p)) throw InputError("input file '" + *p + "' does not exist");
  ArdDataset data = load_responses(responses);
  ProfileMatrix profile = load_profiles(profiles).reordered(data.subpop_names());
  PopulationMargins m = load_margins(margins_path);

  if (!latent.empty()) {
    std::set<std::string> want(latent.begin(), latent.end());
    for (const auto& name : latent)
      if (!data.subpop_index(name)) throw InputError("latent column '" + name + "' is not in the responses header");
    for (std::size_t k = 0; k < profile.num_subpops(); ++k)
      if (profile.is_latent(k) != (want.count(profile.subpop_names()[k]) > 0))
        throw InputError("column '" + profile.subpop_names()[k] +
                         "': latent list and ? cells in the profile file disagree");
  }

  // Hidden populations may be absent from the margins.
  for (std::size_t k = 0; k < profile.num_subpops(); ++k) {
    const auto& name = profile.subpop_names()[k];
    if (m.subpop_index(name)) continue;
    if (!profile.is_latent(k)) throw InputError("known subpopulation '" + name + "' has no row in the margins");
    m.subpop_names.push_back(name);
    m.subpop_sizes.emplace_back(std::nullopt);
    m.cross_counts.emplace_back(std::nullopt);
  }
  if (m.subpop_names.size() != profile.num_subpops())
    throw InputError("margins list subpopulations that are not in the responses");
  m = m.reordered(data.subpop_names());
  for (std::size_t k = 0; k < profile.num_subpops(); ++k)
    if (!profile.is_latent(k) && !m.subpop_sizes[k])
      throw InputError("known subpopulation '" + profile.subpop_names()[k] + "' has no size N_k in the margins");
  check_profile_margins(profile, m);
  return {std::move(data), std::move(profile), std::move(m)};
}

void write_responses(const std::string& path, const ArdDataset& data) {
  auto out = open_out(path);
  std::vector<std::string> header{"respondent_id", "ego_group"};
  header.insert(header.end(), data.subpop_names().begin(), data.subpop_names().end());
  write_csv_row(out, header);
  for (std::size_t i = 0; i < data.num_respondents(); ++i) {
    std::vector<std::string> row{data.respondent_ids()[i], data.ego_group_names()[data.ego_group(i)]};
    for (std::size_t k = 0; k < data.num_subpops(); ++k) row.push_back(format_int(data(i, k)));
    write_csv_row(out, row);
  }
  finish(out, path);
}

void write_profiles(const std::string& path, const ProfileMatrix& profile, bool reveal_latent) {
  auto out = open_out(path);
  std::vector<std::string> header{"alter_group"};
  header.insert(header.end(), profile.subpop_names().begin(), profile.subpop_names().end());
  write_csv_row(out, header);
  for (std::size_t a = 0; a < profile.num_alter_groups(); ++a) {
    std::vector<std::string> row{profile.alter_group_names()[a]};
    for (std::size_t k = 0; k < profile.num_subpops(); ++k)
      row.push_back(profile.is_latent(k) && !reveal_latent ? "?" : format_double(profile(a, k)));
    write_csv_row(out, row);
  }
  finish(out, path);
}

void write_margins(const std::string& path, const PopulationMargins& m) {
  auto out = open_out(path);
  write_csv_row(out, {"level", "name", "count"});
  write_csv_row(out, {"total", "total", format_int(m.total)});
  for (std::size_t a = 0; a < m.num_alter_groups(); ++a)
    write_csv_row(out, {"alter", m.alter_group_names[a], format_int(m.alter_group_sizes[a])});
  for (std::size_t k = 0; k < m.num_subpops(); ++k)
    if (m.subpop_sizes[k]) write_csv_row(out, {"subpop", m.subpop_names[k], format_int(*m.subpop_sizes[k])});
  for (std::size_t k = 0; k < m.num_subpops(); ++k) {
    if (!m.cross_counts[k]) continue;
    for (std::size_t a = 0; a < m.num_alter_groups(); ++a)
      write_csv_row(out, {"cross", m.alter_group_names[a] + "|" + m.subpop_names[k], format_int((*m.cross_counts[k])[a])});
  }
  finish(out, path);
}

Json params_to_json(const ModelParams& p, const ArdDataset& data, const ProfileMatrix& profile) {
  Json j;
  Json degrees = Json::object();
  for (std::size_t i = 0; i < data.num_respondents(); ++i)
    degrees[data.respondent_ids()[i]] = p.log_degrees[static_cast<Eigen::Index>(i)];
  j["log_degrees"] = degrees;
  Json mixing = Json::object();
  for (std::size_t e = 0; e < p.mixing.num_ego_groups(); ++e) {
    Json row = Json::object();
    for (std::size_t a = 0; a < p.mixing.num_alter_groups(); ++a) row[profile.alter_group_names()[a]] = p.mixing(e, a);
    mixing[data.ego_group_names()[e]] = row;
  }
  j["mixing"] = mixing;
  Json omega = Json::object();
  for (std::size_t k = 0; k < profile.num_subpops(); ++k)
    omega[profile.subpop_names()[k]] = p.overdispersion[static_cast<Eigen::Index>(k)];
  j["overdispersion"] = omega;
  Json latent = Json::object();
  const auto cols = profile.latent_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    Json col = Json::object();
    for (std::size_t a = 0; a < profile.num_alter_groups(); ++a)
      col[profile.alter_group_names()[a]] = p.latent_profile(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c));
    latent[profile.subpop_names()[cols[c]]] = col;
  }
  j["latent_profile"] = latent;
  const auto& hp = p.hyper;
  j["hyper"] = {{"mu_d", hp.mu_d},
                {"sigma_d", hp.sigma_d},
                {"mu_m", std::vector<double>(hp.mu_m.data(), hp.mu_m.data() + hp.mu_m.size())},
                {"sigma_m", std::vector<double>(hp.sigma_m.data(), hp.sigma_m.data() + hp.sigma_m.size())},
                {"mu_h", hp.mu_h},
                {"sigma_h", hp.sigma_h}};
  return j;
}

void write_draws(const std::string& path, const PosteriorDraws& draws) {
  auto out = open_out(path);
  std::vector<std::string> header{"chain", "iteration"};
  header.insert(header.end(), draws.names.begin(), draws.names.end());
  write_csv_row(out, header);
  std::vector<std::string> row;
  for (std::size_t c = 0; c < draws.chains.size(); ++c) {
    const auto& m = draws.chains[c];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      row.clear();
      row.push_back(std::to_string(c + 1));
      row.push_back(std::to_string(draws.iterations[c][static_cast<std::size_t>(r)]));
      for (Eigen::Index p = 0; p < m.cols(); ++p) row.push_back(format_double(m(r, p)));
      write_csv_row(out, row);
    }
  }
  finish(out, path);
}

PosteriorDraws load_draws(const std::string& path) {
  const CsvTable t = read_csv(path);
  expect_header(t, path, {"chain", "iteration"});
  PosteriorDraws d;
  d.names.assign(t.header.begin() + 2, t.header.end());
  std::vector<std::vector<std::vector<double>>> rows;  // chain -> row -> values
  std::vector<std::vector<std::size_t>> iters;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    std::int64_t chain = 0, iter = 0;
    if (!parse_int(row[0], chain) || chain < 1) throw InputError(where(path, t.lines[r], "chain") + ": bad chain number");
    if (!parse_int(row[1], iter) || iter < 0) throw InputError(where(path, t.lines[r], "iteration") + ": bad iteration");
    const auto c = static_cast<std::size_t>(chain - 1);
    if (c >= rows.size()) {
      if (c != rows.size()) throw InputError(where(path, t.lines[r], "chain") + ": chains must appear in order");
      rows.emplace_back();
      iters.emplace_back();
    }
    std::vector<double> v;
    for (std::size_t p = 2; p < row.size(); ++p) v.push_back(read_double(row[p], path, t.lines[r], t.header[p]));
    rows[c].push_back(std::move(v));
    iters[c].push_back(static_cast<std::size_t>(iter));
  }
  for (std::size_t c = 0; c < rows.size(); ++c) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows[c].size()), static_cast<Eigen::Index>(d.names.size()));
    for (std::size_t r = 0; r < rows[c].size(); ++r)
      for (std::size_t p = 0; p < d.names.size(); ++p)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p)) = rows[c][r][p];
    d.chains.push_back(std::move(m));
  }
  d.iterations = std::move(iters);
  d.acceptance.assign(d.chains.size(), {});
  return d;
}

void write_degrees(const std::string& path, const std::vector<std::string>& ids, const Eigen::VectorXd& estimate) {
  auto out = open_out(path);
  write_csv_row(out, {"respondent_id", "estimate"});
  for (std::size_t i = 0; i < ids.size(); ++i)
    write_csv_row(out, {ids[i], format_double(estimate[static_cast<Eigen::Index>(i)])});
  finish(out, path);
}

void write_mixing(const std::string& path, const std::vector<std::string>& ego_groups,
                  const std::vector<std::string>& alter_groups, const Eigen::MatrixXd& estimate) {
  auto out = open_out(path);
  write_csv_row(out, {"ego_group", "alter_group", "estimate"});
  for (std::size_t e = 0; e < ego_groups.size(); ++e)
    for (std::size_t a = 0; a < alter_groups.size(); ++a)
      write_csv_row(out, {ego_groups[e], alter_groups[a],
                          format_double(estimate(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(a)))});
  finish(out, path);
}

void write_latent_profiles(const std::string& path, const LatentTable& t) {
  auto out = open_out(path);
  write_csv_row(out, {"subpop", "alter_group", "estimate", "se", "q025", "q25", "q50", "q75", "q975"});
  for (std::size_t j = 0; j < t.subpops.size(); ++j) {
    for (std::size_t a = 0; a < t.alter_groups.size(); ++a) {
      const auto aa = static_cast<Eigen::Index>(a), jj = static_cast<Eigen::Index>(j);
      std::vector<std::string> row{t.subpops[j], t.alter_groups[a], format_double(t.estimate(aa, jj)),
                                   format_double(t.se(aa, jj))};
      for (const auto& q : t.quantiles) row.push_back(format_double(q(aa, jj)));
      write_csv_row(out, row);
    }
  }
  finish(out, path);
}

LatentTable load_latent_profiles(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::vector<std::string> expect{"subpop", "alter_group", "estimate", "se", "q025", "q25", "q50", "q75", "q975"};
  if (t.header != expect) throw InputError(path + ": unexpected header for a latent profile table");
  LatentTable out;
  for (const auto& row : t.rows) {
    if (std::find(out.subpops.begin(), out.subpops.end(), row[0]) == out.subpops.end()) out.subpops.push_back(row[0]);
    if (std::find(out.alter_groups.begin(), out.alter_groups.end(), row[1]) == out.alter_groups.end())
      out.alter_groups.push_back(row[1]);
  }
  const auto A = static_cast<Eigen::Index>(out.alter_groups.size());
  const auto H = static_cast<Eigen::Index>(out.subpops.size());
  if (static_cast<Eigen::Index>(t.rows.size()) != A * H)
    throw InputError(path + ": expected one row per (subpop, alter_group) pair");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.estimate = Eigen::MatrixXd::Constant(A, H, nan);
  out.se = out.estimate;
  for (auto& q : out.quantiles) q = out.estimate;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto j = std::find(out.subpops.begin(), out.subpops.end(), row[0]) - out.subpops.begin();
    const auto a = std::find(out.alter_groups.begin(), out.alter_groups.end(), row[1]) - out.alter_groups.begin();
    out.estimate(a, j) = read_double(row[2], path, t.lines[r], "estimate");
    out.se(a, j) = read_double(row[3], path, t.lines[r], "se");
    for (std::size_t q = 0; q < 5; ++q) out.quantiles[q](a, j) = read_double(row[4 + q], path, t.lines[r], expect[4 + q]);
  }
  return out;
}

std::vector<EstimateRow> load_estimates(const std::string& path) {
  const CsvTable t = read_csv(path);
  std::vector<EstimateRow> out;
  if (t.header == std::vector<std::string>{"respondent_id", "estimate"}) {
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      out.push_back({t.rows[r][0], "", read_double(t.rows[r][1], path, t.lines[r], "estimate")});
  } else if (t.header == std::vector<std::string>{"ego_group", "alter_group", "estimate"}) {
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      out.push_back({t.rows[r][0], t.rows[r][1], read_double(t.rows[r][2], path, t.lines[r], "estimate")});
  } else {
    throw InputError(path + ": not a degree or mixing estimate table");
  }
  return out;
}

void write_json(const std::string& path, const Json& value) {
  auto out = open_out(path);
  out << value.dump(2) << '\n';
  finish(out, path);
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": invalid JSON: " + e.what());
  }
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256: digest initialisation failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

void write_manifest(const std::string& out_dir, const std::string& command, std::uint64_t seed, const Json& config,
                    const std::vector<std::string>& files) {
  Json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["seed"] = seed;
  m["config"] = config;
  Json hashes = Json::object();
  for (const auto& f : files) hashes[f] = sha256_file((fs::path(out_dir) / f).string());
  m["files"] = hashes;
  write_json((fs::path(out_dir) / "manifest.json").string(), m);
}

void ensure_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory '" + dir + "'");
  const auto probe = fs::path(dir) / ".ardprof_write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw InputError("output directory '" + dir + "' is not writable");
  }
  fs::remove(probe, ec);
}

}  // namespace ardprof
