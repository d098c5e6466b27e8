#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "polarity/error.hpp"
#include "polarity/foundations.hpp"
#include "polarity/model.hpp"

using namespace polarity;

namespace {

Point p1(double x) { return Point::Constant(1, x); }
Point p2(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

const auto two_type = VoterDistribution::line({0.0, 1.0}, {0.5, 0.5});

}  // namespace

TEST_CASE("voter distribution rejects bad input") {
  CHECK_THROWS_AS(VoterDistribution({}), PreconditionError);
  CHECK_THROWS_AS(VoterDistribution::line({0.0, 1.0}, {0.5, 0.4}), PreconditionError);
  CHECK_THROWS_AS(VoterDistribution::line({0.0, 0.0}, {0.5, 0.5}), PreconditionError);
  CHECK_THROWS_AS(VoterDistribution::line({0.0, 1.0}, {-0.5, 1.5}), PreconditionError);
  CHECK_THROWS_AS(VoterDistribution({{p1(0.0), 0.5, "a"}, {p2(1.0, 1.0), 0.5, "b"}}),
                  PreconditionError);
  CHECK_NOTHROW(VoterDistribution::line({3.0}, {1.0}));
  CHECK(two_type[0].label == "t0");
}

TEST_CASE("delta and vote probability") {
  CHECK(delta({p1(0.3), p1(0.3)}, p1(5.0)) == 0.0);
  CHECK(delta({p2(0.75, 0.75), p2(0.25, 0.25)}, p2(1.0, 1.0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(delta({p1(0.75), p1(0.25)}, p1(1.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(vote_prob(0.0, Shock(3.0)) == 0.5);
  CHECK(vote_prob(0.5, Shock(1.0)) == 0.75);
  CHECK(vote_prob(3.0, Shock(1.0)) == 1.0);
  CHECK(vote_prob(-3.0, Shock(1.0)) == 0.0);
  CHECK_THROWS_AS(Shock(0.0), PreconditionError);
}

TEST_CASE("support check") {
  CHECK(support_check(two_type, Shock(2.0)).ok);
  CHECK_FALSE(support_check(VoterDistribution::line({0.0, 10.0}, {0.5, 0.5}), Shock(1.0)).ok);
  CHECK(support_check(VoterDistribution::line({4.0}, {1.0}), Shock(0.1)).ok);
}

TEST_CASE("expected payoff on the reference pair") {
  const auto nu = nu_preset("quadratic");
  const Shock shock(1.0);
  const PlatformPair pair{p1(0.75), p1(0.25)};
  CHECK(std::abs(expected_payoff(two_type, nu, shock, pair, Party::kA) - 0.625) <= 1e-12);
  CHECK(std::abs(expected_payoff(two_type, nu, shock, pair, Party::kB) - 0.625) <= 1e-12);
  const PlatformPair same{p1(0.4), p1(0.4)};
  CHECK(expected_payoff(two_type, nu, shock, same, Party::kA) ==
        doctest::Approx(0.5 * (nu(1.0) + nu(0.0))).epsilon(1e-15));
}

TEST_CASE("share lottery of the reference pair") {
  const auto cells = share_lottery(two_type, Shock(1.0), {p1(0.75), p1(0.25)});
  REQUIRE(cells.size() == 3);
  CHECK(cells[0].share_a == 1.0);
  CHECK(cells[0].probability == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(cells[1].share_a == 0.5);
  CHECK(cells[1].probability == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(cells[2].share_a == 0.0);
}

TEST_CASE("exact payoff matches the telescoping oracle on random instances") {
  oracle::Generator gen(7);
  for (int rep = 0; rep < 200; ++rep) {
    const int dim = static_cast<int>(gen.index(1, 3));
    const auto dist = gen.general(gen.index(1, 6), dim);
    const auto nu = gen.concave_nu();
    const Shock shock(gen.uniform(0.2, 4.0));
    PlatformPair pair{Point::Random(dim), Point::Random(dim)};
    const double exact = expected_payoff(dist, nu, shock, pair, Party::kA);
    CHECK(std::abs(exact - oracle::payoff_a(dist, nu, shock, pair)) <= 1e-12);
    double mass = 0.0;
    for (const auto& c : share_lottery(dist, shock, pair)) mass += c.probability;
    CHECK(std::abs(mass - 1.0) <= 1e-12);
  }
}

TEST_CASE("payoff sum exceeds nu(1)+nu(0) and equals it for identical platforms") {
  oracle::Generator gen(11);
  for (int rep = 0; rep < 100; ++rep) {
    const auto dist = gen.general(gen.index(2, 5), 2);
    const auto nu = gen.concave_nu();
    const Shock shock(gen.uniform(0.5, 3.0));
    const PlatformPair pair{Point::Random(2), Point::Random(2)};
    const double sum = expected_payoff(dist, nu, shock, pair, Party::kA) +
                       expected_payoff(dist, nu, shock, pair, Party::kB);
    CHECK(sum >= nu(1.0) + nu(0.0) - 1e-12);
    const PlatformPair same{pair.a, pair.a};
    CHECK(std::abs(expected_payoff(dist, nu, shock, same, Party::kA) +
                   expected_payoff(dist, nu, shock, same, Party::kB) - nu(1.0) - nu(0.0)) <=
          1e-12);
    const auto linear = nu_preset("linear");
    CHECK(std::abs(expected_payoff(dist, linear, shock, pair, Party::kA) +
                   expected_payoff(dist, linear, shock, pair, Party::kB) - 1.0) <= 1e-12);
  }
}

TEST_CASE("monte carlo oracle") {
  const auto nu = nu_preset("quadratic");
  const Shock shock(1.0);
  const PlatformPair pair{p1(0.75), p1(0.25)};
  CHECK(std::abs(mc_payoff(two_type, nu, shock, pair, Party::kA, 1000000, 42) - 0.625) <=
        5e-3);
  CHECK(std::abs(mc_payoff(two_type, nu, shock, {p1(0.3), p1(0.3)}, Party::kA, 100000, 1) -
                 0.5) <= 0.01);
  const double once = mc_payoff(two_type, nu, shock, pair, Party::kA, 1, 99);
  CHECK(once == mc_payoff(two_type, nu, shock, pair, Party::kA, 1, 99));
  CHECK((once == nu(0.0) || once == nu(0.5) || once == nu(1.0)));
  CHECK_THROWS_AS(mc_payoff(two_type, nu, shock, pair, Party::kA, 0, 1), PreconditionError);
}

TEST_CASE("reduced payoff diagnostics") {
  for (const auto& name : nu_preset_names()) {
    const auto nu = nu_preset(name);
    CAPTURE(name);
    CHECK(nu.diagnostics().increasing);
    CHECK(nu.diagnostics().normalized);
    CHECK(std::abs(nu(1.0) - nu(0.0) - 1.0) <= 1e-12);
    if (name == "linear") {
      CHECK_FALSE(nu.diagnostics().catch_up.holds);
      CHECK_FALSE(nu.diagnostics().strictly_concave);
    } else {
      CHECK(nu.diagnostics().catch_up.holds);
      CHECK(nu.diagnostics().strictly_concave);
    }
  }
  CHECK_THROWS_AS(nu_preset("linear").require_catch_up("op"), PreconditionError);
  CHECK_THROWS_AS(ReducedPayoff::direct("decreasing", [](double s) { return -s; }),
                  PreconditionError);
}

TEST_CASE("catch-up one-sided variants under a majority premium") {
  PowerUtility u("2r - r^2", [](double r) { return 2.0 * r - r * r; }, 1.0);
  const auto nu = compose_nu(u, majority_premium_power(1.0, 0.5));
  const auto& cu = nu.diagnostics().catch_up;
  CHECK(nu.diagnostics().increasing);
  CHECK_FALSE(nu.diagnostics().strictly_concave);
  CHECK(cu.holds);
  CHECK(cu.right_limit_holds);
  CHECK_FALSE(cu.left_limit_holds);
  CHECK(nu.right_of_half() > nu(0.5));
  CHECK(nu.left_of_half() < nu(0.5));
}

TEST_CASE("power map validation") {
  CHECK_THROWS_AS(PowerMap("bad", 1.0, [](double s) { return s * s; }), PreconditionError);
  CHECK_THROWS_AS(PowerMap("neg", -1.0, [](double s) { return s; }), PreconditionError);
  const auto prop = PowerMap::proportional(2.0);
  CHECK(prop(0.25) == 0.5);
  CHECK(prop.left_of_half() == 1.0);
}
