#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "polarity/equilibrium_1d.hpp"
#include "polarity/error.hpp"
#include "polarity/foundations.hpp"
#include "polarity/welfare.hpp"

using namespace polarity;

namespace {

const auto two_type = VoterDistribution::line({0.0, 1.0}, {0.5, 0.5});
const auto three_type = VoterDistribution::line({-1.0, 0.0, 1.0}, {0.3, 0.4, 0.3});
Point p1(double x) { return Point::Constant(1, x); }

PowerUtility placement() {
  return u_from_placements({[](double k) { return 1.0 - 0.5 * k; }, 1.0, 1.0});
}

}  // namespace

TEST_CASE("reference policy lottery and decomposition") {
  const auto lot = policy_lottery({p1(0.75), p1(0.25)}, two_type, PowerMap::proportional(),
                                  Shock(1.0));
  REQUIRE(lot.outcomes.size() == 3);
  CHECK(lot.outcomes[0].policy == 0.75);
  CHECK(lot.outcomes[0].probability == doctest::Approx(0.25));
  CHECK(lot.outcomes[1].policy == 0.5);
  CHECK(lot.outcomes[1].probability == doctest::Approx(0.5));
  CHECK(lot.outcomes[2].policy == 0.25);
  const auto w = welfare_decomposition(lot, two_type);
  CHECK(w.x_opt == 0.5);
  CHECK(std::abs(w.bias_sq) <= 1e-15);
  CHECK(std::abs(w.variance - 1.0 / 32.0) <= 1e-12);
  CHECK(std::abs(w.w_star + 0.28125) <= 1e-12);
}

TEST_CASE("degenerate lotteries") {
  const auto at = policy_lottery({p1(0.5), p1(0.5)}, two_type, PowerMap::proportional(),
                                 Shock(1.0));
  CHECK(at.variance == 0.0);
  const auto w = welfare_decomposition(at, two_type);
  CHECK(std::abs(w.w_star - w.w_opt) <= 1e-15);
  const auto off = policy_lottery({p1(0.8), p1(0.8)}, two_type, PowerMap::proportional(),
                                  Shock(1.0));
  CHECK(std::abs(welfare_decomposition(off, two_type).w_star - (w.w_opt - 0.09)) <= 1e-12);
}

TEST_CASE("decomposition agrees with direct integration") {
  oracle::Generator gen(99);
  for (int rep = 0; rep < 60; ++rep) {
    const auto dist = gen.line(gen.index(1, 6));
    const auto nu = gen.concave_nu();
    const Shock shock(gen.uniform(0.3, 3.0));
    const PlatformPair pair{p1(gen.uniform(-1, 1)), p1(gen.uniform(-1, 1))};
    const auto w = welfare_decomposition(policy_lottery(pair, dist, nu.power(), shock), dist);
    CHECK(std::abs(w.w_star - oracle::expected_welfare(dist, nu, shock, pair)) <= 1e-10);
  }
}

TEST_CASE("maximal premium collapses the lottery support") {
  const auto power = majority_premium_power(1.0, 1.0 - 1e-6);
  const auto lot = policy_lottery({p1(0.75), p1(0.25)}, two_type, power, Shock(1.0));
  for (const auto& o : lot.outcomes) {
    const bool edge = std::abs(o.lambda) < 1e-5 || std::abs(o.lambda - 1.0) < 1e-5 ||
                      o.lambda == 0.5;
    CHECK(edge);
  }
}

TEST_CASE("premium sweep on the symmetric three-type instance") {
  const Shock shock(4.0);
  const std::vector<double> premiums{0.0, 0.5, 0.9, 0.99, kMaxPremiumFraction};
  const auto sweep = premium_sweep(three_type, placement(), 1.0, premiums, shock, 2);
  REQUIRE(sweep.rows.size() == premiums.size());
  for (std::size_t k = 1; k < sweep.rows.size(); ++k)
    CHECK(sweep.rows[k].distance < sweep.rows[k - 1].distance);
  for (const auto& r : sweep.rows) CHECK(std::abs(r.x_low + r.x_high) <= 1e-12);
  const auto plain = equilibrium_1d(three_type, compose_nu(placement(), PowerMap::proportional()),
                                    shock);
  CHECK(std::abs(sweep.rows[0].x_high - plain.x_high) <= 1e-12);
  const auto& last = sweep.rows.back();
  CHECK(last.distance < 1e-3);
  CHECK(std::abs(last.welfare - sweep.limit_welfare) < 1e-5);
  CHECK(sweep.limit_welfare == sweep.w_opt);
  CHECK_THROWS_AS(premium_sweep(three_type, placement(), 1.0, {1.0}, shock), PreconditionError);

  const auto serial = premium_sweep(three_type, placement(), 1.0, premiums, shock, 1);
  for (std::size_t k = 0; k < premiums.size(); ++k)
    CHECK(serial.rows[k].welfare == sweep.rows[k].welfare);
}

TEST_CASE("premium sweep warns when the median type has no mass") {
  const auto sweep = premium_sweep(two_type, placement(), 1.0, {0.0, 0.5}, Shock(1.0));
  CHECK_FALSE(sweep.limit_checked);
  CHECK_FALSE(sweep.warnings.empty());
}
