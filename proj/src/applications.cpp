#include "polarity/applications.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

#include "polarity/equilibrium_1d.hpp"
#include "polarity/equilibrium_kd.hpp"
#include "polarity/error.hpp"
#include "polarity/welfare.hpp"

namespace polarity {

namespace {

constexpr double kClosedFormTolerance = 1e-10;

bool open_unit(double v) { return v > 0.0 && v < 1.0; }

// Two-issue electorate in salience-scaled coordinates (common, conflict).
double two_issue_payoff(const InfoScenario& sc, double common_state,
                        const ReducedPayoff& nu, const Shock& shock) {
  const double c = std::sqrt(1.0 - sc.alpha) * common_state;
  const double r = std::sqrt(sc.alpha) * sc.posterior;
  const double s = std::sqrt(sc.alpha) * (1.0 - sc.posterior);
  if (r == s) return 0.5 * (nu(1.0) + nu(0.0));
  Point xr(2), xs(2);
  xr << c, r;
  xs << c, s;
  VoterDistribution dist({{xr, 0.5, "R"}, {xs, 0.5, "S"}});
  return party_preferred(dist, nu, shock).preferred.front().payoff;
}

}  // namespace

double gamma(const ReducedPayoff& nu) { return 2.0 * nu(0.5) - (nu(1.0) + nu(0.0)); }

double conflict_premium(const VoterDistribution& dist, const ReducedPayoff& nu,
                        const Shock& shock, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw PreconditionError(fmt::format("salience {} outside (0, 1]", alpha));
  const auto eq = equilibrium_1d(dist, nu, shock);
  const double d = eq.distance();
  return 0.5 * (nu(1.0) + nu(0.0)) + alpha * d * d / (2.0 * shock.phi());
}

void InfoScenario::validate() const {
  if (!open_unit(alpha)) throw PreconditionError("alpha must lie in (0,1)");
  if (!open_unit(pi_q) || !open_unit(pi_x))
    throw PreconditionError("priors must lie in (0,1)");
  if (!(posterior >= 0.0 && posterior <= 1.0))
    throw PreconditionError("posterior must lie in [0,1]");
}

InfoPlatforms info_platforms(const InfoScenario& scenario, const ReducedPayoff& nu) {
  nu.require_normalized("info_platforms");
  const double p = scenario.posterior;
  const double lower = nu(0.5) - nu(0.0);
  const double upper = nu(1.0) - nu(0.5);
  InfoPlatforms out;
  out.x_high = lower * p + upper * (1.0 - p);
  out.x_low = lower * (1.0 - p) + upper * p;
  out.separation = gamma(nu) * (2.0 * p - 1.0);
  return out;
}

InfoReport info_report(const InfoScenario& scenario, const ReducedPayoff& nu,
                       const Shock& shock) {
  scenario.validate();
  InfoReport out;
  out.platforms = info_platforms(scenario, nu);
  out.gamma = gamma(nu);
  out.payoff_common_revealed = two_issue_payoff(scenario, 1.0, nu, shock);
  out.payoff_common_unrevealed = two_issue_payoff(scenario, scenario.pi_q, nu, shock);
  if (std::abs(out.payoff_common_revealed - out.payoff_common_unrevealed) >
      kClosedFormTolerance)
    throw ConsistencyError("revealing the common state changed party payoffs");
  out.common_interest_gain = common_interest_welfare_gain(scenario.alpha, scenario.pi_q);

  const double p = scenario.posterior;
  const double belief_variance = p * (1.0 - p);
  double w_star = 0.0;
  if (p != 0.5) {
    const auto dist = VoterDistribution::line({p, 1.0 - p}, {0.5, 0.5});
    const PlatformPair pair{Point::Constant(1, out.platforms.x_high),
                            Point::Constant(1, out.platforms.x_low)};
    w_star = welfare_decomposition(policy_lottery(pair, dist, nu.power(), shock), dist)
                 .w_star;
  }
  out.conflict_welfare = scenario.alpha * (w_star - belief_variance);
  return out;
}

double common_interest_welfare_gain(double alpha, double pi_q) {
  if (!open_unit(alpha) || !open_unit(pi_q))
    throw PreconditionError("alpha and pi_q must lie in (0,1)");
  return (1.0 - alpha) * pi_q * (1.0 - pi_q);
}

IdentityShift identity_shift(const VoterDistribution& dist, const PlatformPair& pair,
                             double theta) {
  if (!(theta >= 0.0)) throw PreconditionError("identity weight must be nonnegative");
  if (pair.a.size() != dist.dimension() || pair.b.size() != dist.dimension())
    throw PreconditionError("identity_shift: platform dimension mismatch");
  if (pair.a == pair.b) throw PreconditionError("identity_shift: platforms coincide");
  const Point step = theta * (pair.a - pair.b);
  auto types = dist.types();
  std::vector<bool> unshifted(types.size(), false);
  for (std::size_t i = 0; i < types.size(); ++i) {
    const double da = (types[i].bliss - pair.a).squaredNorm();
    const double db = (types[i].bliss - pair.b).squaredNorm();
    if (std::abs(da - db) <= 1e-12 * std::max(1.0, da)) {
      unshifted[i] = true;
      continue;
    }
    types[i].bliss += da < db ? step : Point(-step);
  }
  return {VoterDistribution(std::move(types)), std::move(unshifted)};
}

void DynamicsParams::validate() const {
  if (!(gap >= 0.0) || !std::isfinite(gap)) throw PreconditionError("gap must be >= 0");
  if (!(theta_low >= 0.0 && theta_high >= theta_low))
    throw PreconditionError("need 0 <= theta_low <= theta_high");
  if (!(cost > 0.0)) throw PreconditionError("identity cost must be positive");
  if (!(phi > 0.0)) throw PreconditionError("phi must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw PreconditionError("gamma must lie in (0,1)");
}

bool amplification_check(const DynamicsParams& p) {
  p.validate();
  if (!(p.theta_low > 0.0 && p.theta_high > p.theta_low)) return false;
  const double g = p.gamma;
  const double branch_gap =
      1.0 / ((p.theta_high - p.theta_low) * (1.0 + g * (p.theta_high + p.theta_low)));
  const double branch_low = 1.0 / (p.theta_low * (1.0 + g * p.theta_low));
  const double rhs = p.phi * p.cost / (2.0 * g * g * g) * std::max(branch_gap, branch_low);
  return p.gap * p.gap > rhs;
}

DynamicsTrajectory dynamics_trajectory(const DynamicsParams& params,
                                       const ReducedPayoff* nu) {
  params.validate();
  if (params.gap <= 0.0) throw PreconditionError("dynamics need a positive voter gap");
  DynamicsTrajectory out;
  out.amplified = amplification_check(params);
  out.theta = params.rule == InvestmentRule::kAlways || out.amplified ? params.theta_high
                                                                        : 0.0;
  const double g = params.gamma;
  out.ratio = 2.0 * out.theta * g;
  if (std::abs(out.ratio - 1.0) <= 1e-12) {
    out.regime = "knife-edge";
    out.limit = std::numeric_limits<double>::infinity();
  } else if (out.ratio < 1.0) {
    out.regime = "converging";
    out.limit = g * params.gap / (1.0 - out.ratio);
  } else {
    out.regime = "diverging";
    out.limit = std::numeric_limits<double>::infinity();
  }
  if (nu) {
    if (std::abs(gamma(*nu) - g) > 1e-12)
      throw PreconditionError("dynamics gamma does not match nu");
    out.eq1d_checked = true;
  }

  // Two-type weights with nu(0) = 0, nu(1/2) = (1 + gamma)/2, nu(1) = 1.
  const double w_near = 0.5 * (1.0 + g);
  const double w_far = 0.5 * (1.0 - g);
  const double x_low = 0.0;
  const double x_high = params.gap;
  double prev_a = 0.0;
  double prev_b = 0.0;
  double partial = 0.0;
  double power = 1.0;
  for (std::size_t t = 0; t <= params.periods; ++t) {
    double lo = x_low;
    double hi = x_high;
    const double theta = t == 0 ? 0.0 : out.theta;
    if (t > 0) {
      // Platforms stay symmetric about gap/2, so the high type always sides
      // with A; comparing distances instead loses the 1/2 offset once gaps
      // reach 1e16.
      const double step = theta * (prev_a - prev_b);
      hi += step;
      lo -= step;
    }
    const double x_a = w_near * hi + w_far * lo;
    const double x_b = w_far * hi + w_near * lo;
    partial += power;
    power *= out.ratio;
    DynamicsRecord rec{t, theta, hi - lo, std::abs(x_a - x_b), g * params.gap * partial,
                       x_a, x_b};
    if (std::abs(rec.platform_gap - rec.closed_form) >
        kClosedFormTolerance * std::max(1.0, rec.closed_form))
      throw ConsistencyError(fmt::format(
          "period {}: simulated gap {:.17g} vs closed form {:.17g}", t, rec.platform_gap,
          rec.closed_form));
    if (nu) {
      const auto eq = equilibrium_1d(VoterDistribution::line({lo, hi}, {0.5, 0.5}), *nu,
                                     Shock(params.phi));
      if (std::abs(eq.x_high - x_a) > kClosedFormTolerance * std::max(1.0, std::abs(x_a)) ||
          std::abs(eq.x_low - x_b) > kClosedFormTolerance * std::max(1.0, std::abs(x_b)))
        throw ConsistencyError(fmt::format("period {}: two-type platforms differ from "
                                           "equilibrium_1d",
                                           t));
    }
    out.records.push_back(rec);
    prev_a = x_a;
    prev_b = x_b;
  }
  return out;
}

}  // namespace polarity
