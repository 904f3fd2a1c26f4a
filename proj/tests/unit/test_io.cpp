#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>

#include "ardprof/error.hpp"
#include "ardprof/csv.hpp"
#include "ardprof/io.hpp"
#include "ardprof/simulator.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace ardprof;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

const char* kResponses =
    "respondent_id,ego_group,k1,k2,k3,hid\n"
    "r1,E1,1,0,2,0\n"
    "r2,E2,0,3,1,1\n"
    "r3,E1,2,2,0,0\n";

const char* kProfiles =
    "alter_group,k1,k2,k3,hid\n"
    "young,0.004,0.00083333333333333339,0.005,?\n"
    "old,0.0015,0.00375,0.005,?\n";

const char* kMargins =
    "level,name,count\n"
    "total,,1000000\n"
    "alter,young,600000\n"
    "alter,old,400000\n"
    "subpop,k1,3000\n"
    "subpop,k2,2000\n"
    "subpop,k3,5000\n"
    "cross,young|k1,2400\n"
    "cross,old|k1,600\n"
    "cross,young|k2,500\n"
    "cross,old|k2,1500\n"
    "cross,young|k3,3000\n"
    "cross,old|k3,2000\n";

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("small fixture parses") {
    fixture::TempDir dir("io");
    fixture::write_text(dir.file("r.csv"), kResponses);
    fixture::write_text(dir.file("p.csv"), kProfiles);
    fixture::write_text(dir.file("m.csv"), kMargins);
    const auto in = load_inputs(dir.file("r.csv"), dir.file("p.csv"), dir.file("m.csv"));
    CHECK(in.data.num_respondents() == 3);
    CHECK(in.data.num_subpops() == 4);
    CHECK(in.data.num_ego_groups() == 2);
    CHECK(in.data(1, 1) == 3);
    CHECK(in.profile.latent_mask().count() == 2);
    CHECK_FALSE(in.margins.subpop_sizes[3].has_value());
    CHECK(in.profile(1, 1) == doctest::Approx(0.00375));
    const auto again = load_inputs(dir.file("r.csv"), dir.file("p.csv"), dir.file("m.csv"), {"hid"});
    CHECK(again.profile.latent_columns() == std::vector<std::size_t>{3});
    CHECK_THROWS_AS(load_inputs(dir.file("r.csv"), dir.file("p.csv"), dir.file("m.csv"), {"k1"}), InputError);
  }

  TEST_CASE("negative count names row and column") {
    fixture::TempDir dir("io");
    fixture::write_text(dir.file("r.csv"),
                        "respondent_id,ego_group,k1,k2\n"
                        "r1,E1,1,0\n"
                        "r2,E2,0,-4\n");
    const auto msg = error_of([&] { load_responses(dir.file("r.csv")); });
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("k2") != std::string::npos);
    fixture::write_text(dir.file("r.csv"), "respondent_id,ego_group,k1\nr1,E1,1.5\n");
    CHECK(error_of([&] { load_responses(dir.file("r.csv")); }).find("k1") != std::string::npos);
  }

  TEST_CASE("a full-size response file parses") {
    WorldOptions w;
    w.respondents = 1375;
    w.latent_columns = 0;
    w.seed = 31;
    const auto sim = simulate(make_sim_config(w));
    fixture::TempDir dir("io");
    write_responses(dir.file("r.csv"), sim.dataset);
    const auto back = load_responses(dir.file("r.csv"));
    CHECK(back.num_respondents() == 1375);
    CHECK(back.num_subpops() == 12);
    CHECK(back.counts() == sim.dataset.counts());
    CHECK(back.respondent_ids() == sim.dataset.respondent_ids());
  }

  TEST_CASE("profiles and margins round-trip") {
    WorldOptions w;
    w.respondents = 20;
    w.seed = 32;
    const auto sim = simulate(make_sim_config(w));
    fixture::TempDir dir("io");
    write_profiles(dir.file("p.csv"), sim.profile);
    write_margins(dir.file("m.csv"), sim.margins);
    write_responses(dir.file("r.csv"), sim.dataset);
    const auto in = load_inputs(dir.file("r.csv"), dir.file("p.csv"), dir.file("m.csv"));
    CHECK(in.profile.values() == sim.profile.values());
    CHECK(in.profile.latent_mask() == sim.profile.latent_mask());
    CHECK(in.margins.subpop_sizes == sim.margins.subpop_sizes);
    CHECK(in.margins.alter_group_sizes == sim.margins.alter_group_sizes);
  }

  TEST_CASE("profile disagreeing with margins is rejected") {
    fixture::TempDir dir("io");
    fixture::write_text(dir.file("r.csv"), "respondent_id,ego_group,k1\nr1,E1,1\n");
    fixture::write_text(dir.file("p.csv"), "alter_group,k1\na,0.04\nb,0.05\n");
    fixture::write_text(dir.file("m.csv"),
                        "level,name,count\ntotal,,2000\nalter,a,1000\nalter,b,1000\nsubpop,k1,100\n"
                        "cross,a|k1,50\ncross,b|k1,50\n");
    const auto msg = error_of([&] { load_inputs(dir.file("r.csv"), dir.file("p.csv"), dir.file("m.csv")); });
    CHECK(msg.find("N_ak / N_a") != std::string::npos);
    CHECK(msg.find("'a'") != std::string::npos);
  }

  TEST_CASE("alter totals must add up to N") {
    fixture::TempDir dir("io");
    fixture::write_text(dir.file("m.csv"), "level,name,count\ntotal,,2001\nalter,a,1000\nalter,b,1000\n");
    CHECK_THROWS_AS(load_margins(dir.file("m.csv")), InputError);
    fixture::write_text(dir.file("m.csv"), "level,name,count\ntotal,,2000\nalter,a,1000\nalter,b,1000\nbogus,x,1\n");
    CHECK(error_of([&] { load_margins(dir.file("m.csv")); }).find("unknown level") != std::string::npos);
  }

  TEST_CASE("missing input names the path") {
    const auto msg = error_of([] { load_inputs("/nonexistent/r.csv", "/nonexistent/p.csv", "/nonexistent/m.csv"); });
    CHECK(msg.find("/nonexistent/r.csv") != std::string::npos);
  }

  TEST_CASE("latent mask must be constant within a column") {
    fixture::TempDir dir("io");
    fixture::write_text(dir.file("p.csv"), "alter_group,k1\na,?\nb,0.05\n");
    CHECK_THROWS_AS(load_profiles(dir.file("p.csv")), InputError);
  }

  TEST_CASE("draws round-trip exactly") {
    PosteriorDraws d;
    d.names = {"log_d.r1", "omega.k1"};
    d.chains = {Eigen::MatrixXd(2, 2), Eigen::MatrixXd(2, 2)};
    d.chains[0] << 0.1, 1.0 / 3.0, 2.0, 1e-300;
    d.chains[1] << -5.25, 7.0, std::nextafter(1.0, 2.0), 4.0;
    d.iterations = {{11, 12}, {11, 12}};
    fixture::TempDir dir("io");
    write_draws(dir.file("draws.csv"), d);
    const auto back = load_draws(dir.file("draws.csv"));
    CHECK(back.names == d.names);
    REQUIRE(back.chains.size() == 2);
    CHECK(back.chains[0] == d.chains[0]);
    CHECK(back.chains[1] == d.chains[1]);
    CHECK(back.iterations == d.iterations);
  }

  TEST_CASE("latent table has A rows per latent column with five quantiles") {
    LatentTable t;
    t.subpops = {"h1", "h2"};
    t.alter_groups = {"a", "b", "c"};
    t.estimate = Eigen::MatrixXd::Constant(3, 2, 0.01);
    t.se = Eigen::MatrixXd::Constant(3, 2, 0.002);
    for (std::size_t q = 0; q < 5; ++q) t.quantiles[q] = Eigen::MatrixXd::Constant(3, 2, 0.005 * (q + 1));
    t.estimate(2, 1) = 0.125;
    fixture::TempDir dir("io");
    write_latent_profiles(dir.file("l.csv"), t);
    const auto csv = read_csv(dir.file("l.csv"));
    CHECK(csv.rows.size() == 6);
    CHECK(csv.header.size() == 9);
    const auto back = load_latent_profiles(dir.file("l.csv"));
    CHECK(back.estimate == t.estimate);
    CHECK(back.quantiles[4] == t.quantiles[4]);
    CHECK(back.alter_groups == t.alter_groups);
  }

  TEST_CASE("manifest hashes change exactly when a file changes") {
    fixture::TempDir dir("io");
    fixture::write_text(dir.file("a.csv"), "x\n1\n");
    fixture::write_text(dir.file("b.csv"), "y\n2\n");
    write_manifest(dir.str(), "test", 7, Json::object(), {"a.csv", "b.csv"});
    const auto first = read_json(dir.file("manifest.json"));
    write_manifest(dir.str(), "test", 7, Json::object(), {"a.csv", "b.csv"});
    CHECK(read_json(dir.file("manifest.json")) == first);
    fixture::write_text(dir.file("a.csv"), "x\n3\n");
    write_manifest(dir.str(), "test", 7, Json::object(), {"a.csv", "b.csv"});
    const auto second = read_json(dir.file("manifest.json"));
    CHECK(second["files"]["a.csv"] != first["files"]["a.csv"]);
    CHECK(second["files"]["b.csv"] == first["files"]["b.csv"]);
    CHECK(first["version"] == kVersion);
    // Known digest of "abc".
    fixture::write_text(dir.file("abc"), "abc");
    CHECK(sha256_file(dir.file("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }

  TEST_CASE("output directory that cannot be created") {
    fixture::TempDir dir("io");
    fixture::write_text(dir.file("plain"), "x");
    CHECK_THROWS_AS(ensure_output_dir(dir.file("plain") + "/sub"), InputError);
    CHECK_NOTHROW(ensure_output_dir(dir.file("new/deeper")));
  }
}
