#include <cmath>

#include "doctest.h"
#include "polarity/applications.hpp"
#include "polarity/error.hpp"
#include "polarity/foundations.hpp"

using namespace polarity;

namespace {
const auto two_type = VoterDistribution::line({0.0, 1.0}, {0.5, 0.5});
}

TEST_CASE("gamma") {
  CHECK(std::abs(gamma(nu_preset("quadratic")) - 0.5) <= 1e-12);
  CHECK(gamma(nu_preset("linear")) == 0.0);
  CHECK(std::abs(gamma(nu_preset("sqrt-sharing")) - 0.41421356237309515) <= 1e-12);
}

TEST_CASE("conflict premium") {
  const auto nu = nu_preset("quadratic");
  const Shock shock(1.0);
  CHECK(std::abs(conflict_premium(two_type, nu, shock, 1.0) - 0.625) <= 1e-12);
  CHECK(std::abs(conflict_premium(two_type, nu, shock, 0.6) - 0.575) <= 1e-12);
  CHECK(std::abs(conflict_premium(VoterDistribution::line({0.4}, {1.0}), nu, shock, 0.3) - 0.5) <=
        1e-12);
  CHECK_THROWS_AS(conflict_premium(two_type, nu, shock, 0.0), PreconditionError);
  CHECK_THROWS_AS(conflict_premium(two_type, nu, shock, 1.5), PreconditionError);
}

TEST_CASE("information platforms") {
  const auto nu = nu_preset("quadratic");
  InfoScenario sc;
  sc.posterior = 1.0;
  auto p = info_platforms(sc, nu);
  CHECK(std::abs(p.x_high - 0.75) <= 1e-12);
  CHECK(std::abs(p.x_low - 0.25) <= 1e-12);
  CHECK(std::abs(p.separation - 0.5) <= 1e-12);
  sc.posterior = 0.5;
  CHECK(std::abs(info_platforms(sc, nu).separation) <= 1e-15);
  sc.posterior = 0.0;
  CHECK(std::abs(info_platforms(sc, nu).separation + 0.5) <= 1e-12);
}

TEST_CASE("information report") {
  const auto nu = nu_preset("quadratic");
  InfoScenario sc{0.5, 0.3, 0.5, 0.8};
  const auto rep = info_report(sc, nu, Shock(2.0));
  CHECK(rep.payoff_common_revealed == doctest::Approx(rep.payoff_common_unrevealed));
  CHECK(std::abs(rep.common_interest_gain - 0.5 * 0.21) <= 1e-12);
  CHECK(rep.conflict_welfare < 0.0);
  sc.alpha = 1.0;
  CHECK_THROWS_AS(info_report(sc, nu, Shock(2.0)), PreconditionError);
}

TEST_CASE("common-interest welfare gain") {
  CHECK(std::abs(common_interest_welfare_gain(0.6, 0.5) - 0.1) <= 1e-12);
  CHECK(common_interest_welfare_gain(0.6, 1e-9) < 1e-8);
  CHECK(common_interest_welfare_gain(1.0 - 1e-9, 0.5) < 1e-8);
}

TEST_CASE("identity shift leaves equidistant types alone") {
  const auto three = VoterDistribution::line({0.0, 0.5, 1.0}, {0.3, 0.4, 0.3});
  const PlatformPair pair{Point::Constant(1, 0.75), Point::Constant(1, 0.25)};
  const auto s = identity_shift(three, pair, 0.5);
  CHECK(s.unshifted[1]);
  CHECK(s.shifted[1].bliss[0] == 0.5);
  CHECK(std::abs(s.shifted[2].bliss[0] - 1.25) <= 1e-12);
  CHECK(std::abs(s.shifted[0].bliss[0] + 0.25) <= 1e-12);
  CHECK_THROWS_AS(identity_shift(three, {pair.a, pair.a}, 0.5), PreconditionError);
}

TEST_CASE("dynamics trajectory") {
  DynamicsParams p;  // gap 1, gamma 1/2, theta_H 0.4, theta_L 0.2, c 0.01, phi 1
  p.periods = 2;
  const auto t = dynamics_trajectory(p, nullptr);
  REQUIRE(t.records.size() == 3);
  CHECK(t.amplified);
  CHECK(std::abs(t.records[0].platform_gap - 0.5) <= 1e-12);
  CHECK(std::abs(t.records[1].platform_gap - 0.7) <= 1e-12);
  CHECK(std::abs(t.records[2].platform_gap - 0.78) <= 1e-12);
  CHECK(std::abs(t.limit - 0.5 / 0.6) <= 1e-12);
  CHECK(t.regime == "converging");

  const auto nu = nu_preset("quadratic");
  const auto checked = dynamics_trajectory(p, &nu);
  CHECK(checked.eq1d_checked);

  DynamicsParams flat = p;
  flat.theta_high = 0.0;
  flat.theta_low = 0.0;
  flat.periods = 5;
  for (const auto& r : dynamics_trajectory(flat).records)
    CHECK(std::abs(r.platform_gap - 0.5) <= 1e-15);

  DynamicsParams edge = p;
  edge.theta_high = 1.0;
  edge.rule = InvestmentRule::kAlways;
  edge.periods = 4;
  const auto e = dynamics_trajectory(edge);
  CHECK(e.regime == "knife-edge");
  for (const auto& r : e.records) CHECK(std::abs(r.platform_gap - 0.5 * (r.t + 1.0)) <= 1e-12);
}

TEST_CASE("amplification condition") {
  DynamicsParams p;
  CHECK(amplification_check(p));
  p.cost = 1e9;
  CHECK_FALSE(amplification_check(p));
  p.cost = 0.01;
  p.gap = 1e-9;
  CHECK_FALSE(amplification_check(p));
}
