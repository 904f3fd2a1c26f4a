#include <Eigen/LU>

#include "ardprof/identifiability.hpp"
#include "ardprof/simulator.hpp"
#include "doctest.h"

using namespace ardprof;

TEST_SUITE("identifiability") {
  TEST_CASE("scaled-down known block has full rank") {
    const auto r = make_regime_profiles(ProfileRegime::scaled_down, default_population(), 12);
    const Eigen::MatrixXd X = r.profile.known_submatrix();
    // Independent rank via full-pivot LU.
    Eigen::FullPivLU<Eigen::MatrixXd> lu(X);
    lu.setThreshold(1e-10);
    CHECK(lu.rank() == 8);
    const auto rep = validate_identifiability(r.profile);
    CHECK(rep.rank == 8);
    CHECK_FALSE(rep.deficient);
    CHECK(std::isfinite(rep.condition_number));
  }

  TEST_CASE("flat profiles are rank one") {
    const auto r = make_regime_profiles(ProfileRegime::flat, default_population(), 12);
    const auto rep = validate_identifiability(r.profile);
    CHECK(rep.rank == 1);
    CHECK(rep.deficient);
    CHECK(std::isinf(rep.condition_number));
    CHECK(rep.describe().find("NOT identifiable") != std::string::npos);
  }

  TEST_CASE("fewer known columns than alter groups is always flagged") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Identity(8, 7);
    X(7, 0) = 0.5;
    const auto rep = rank_report(X);
    CHECK(rep.rank == 7);
    CHECK(rep.deficient);
  }

  TEST_CASE("identity is perfectly conditioned") {
    const auto rep = rank_report(Eigen::MatrixXd::Identity(4, 4));
    CHECK(rep.rank == 4);
    CHECK(rep.condition_number == doctest::Approx(1.0));
  }
}
