#include "polarity/equilibrium_1d.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polarity/error.hpp"

namespace polarity {

namespace {

constexpr double kFosdTolerance = 1e-12;
constexpr double kIdentityTolerance = 1e-10;

void require_line(const VoterDistribution& dist, const char* op) {
  if (dist.dimension() != 1)
    throw PreconditionError(
        fmt::format("{} needs a one-dimensional distribution, got K = {}", op,
                    dist.dimension()));
}

std::vector<std::size_t> ascending(const VoterDistribution& dist) {
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dist[a].bliss[0] < dist[b].bliss[0];
  });
  return order;
}

// head[p] = mass of the first p sorted types; head[N] pinned to 1.
std::vector<double> head_shares(const VoterDistribution& dist,
                                const std::vector<std::size_t>& order) {
  std::vector<double> head(order.size() + 1, 0.0);
  for (std::size_t p = 0; p < order.size(); ++p) head[p + 1] = head[p] + dist[order[p]].share;
  head.back() = 1.0;
  return head;
}

// tail[p] = mass of sorted types p..N-1 by backward summation; tail[0] = 1.
std::vector<double> tail_shares(const VoterDistribution& dist,
                                const std::vector<std::size_t>& order) {
  std::vector<double> tail(order.size() + 1, 0.0);
  for (std::size_t p = order.size(); p-- > 0;) tail[p] = tail[p + 1] + dist[order[p]].share;
  tail.front() = 1.0;
  return tail;
}

struct Side {
  std::vector<double> values;
  std::vector<double> mass;
};

double total(const Side& side) {
  return std::accumulate(side.mass.begin(), side.mass.end(), 0.0);
}

double cdf(const Side& side, double t) {
  double c = 0.0;
  for (std::size_t k = 0; k < side.values.size(); ++k)
    if (side.values[k] <= t) c += side.mass[k];
  return c / total(side);
}

// Outcome of comparing P against Q for "P first-order dominates Q".
struct Dominance {
  bool weak = true;
  bool strict = false;
};

Dominance dominates(const Side& p, const Side& q) {
  Dominance d;
  if (total(p) <= 0.0 || total(q) <= 0.0) return d;  // vacuous side
  std::vector<double> grid = p.values;
  grid.insert(grid.end(), q.values.begin(), q.values.end());
  std::sort(grid.begin(), grid.end());
  for (double t : grid) {
    const double gap = cdf(q, t) - cdf(p, t);
    if (gap < -kFosdTolerance) d.weak = false;
    if (gap > kFosdTolerance) d.strict = true;
  }
  return d;
}

}  // namespace

PlatformPair Equilibrium1D::pair() const {
  return {Point::Constant(1, x_high), Point::Constant(1, x_low)};
}

const char* to_string(GroupEffect effect) {
  switch (effect) {
    case GroupEffect::kAttract:
      return "ATTRACT";
    case GroupEffect::kAlienate:
      return "ALIENATE";
    case GroupEffect::kUnclassified:
      break;
  }
  return "UNCLASSIFIED";
}

ClosedForm1D closed_form_platforms_1d(const VoterDistribution& dist,
                                      const ReducedPayoff& nu) {
  require_line(dist, "closed_form_platforms_1d");
  const auto order = ascending(dist);
  const auto tail = tail_shares(dist, order);
  const auto head = head_shares(dist, order);
  ClosedForm1D out;
  out.weights_high.assign(dist.size(), 0.0);
  out.weights_low.assign(dist.size(), 0.0);
  for (std::size_t p = 0; p < order.size(); ++p) {
    const std::size_t i = order[p];
    const double hi = nu(tail[p]) - nu(tail[p + 1]);
    const double lo = nu(head[p + 1]) - nu(head[p]);
    out.weights_high[i] = hi;
    out.weights_low[i] = lo;
    out.x_high += hi * dist[i].bliss[0];
    out.x_low += lo * dist[i].bliss[0];
  }
  return out;
}

Equilibrium1D equilibrium_1d(const VoterDistribution& dist, const ReducedPayoff& nu,
                             const Shock& shock) {
  require_line(dist, "equilibrium_1d");
  nu.require_catch_up("equilibrium_1d");
  const double base = 0.5 * (nu(1.0) + nu(0.0));
  Equilibrium1D eq;
  eq.support_ok = support_check(dist, shock).ok;
  if (dist.size() == 1) {
    const double x = dist[0].bliss[0];
    eq.x_low = eq.x_high = eq.x_rn = eq.median = x;
    eq.weights_low = eq.weights_high = {1.0};
    eq.payoff = base;
    eq.diverse = false;
    return eq;
  }

  auto cf = closed_form_platforms_1d(dist, nu);
  eq.x_low = cf.x_low;
  eq.x_high = cf.x_high;
  eq.weights_low = std::move(cf.weights_low);
  eq.weights_high = std::move(cf.weights_high);
  eq.payoff = base + eq.distance() * eq.distance() / (2.0 * shock.phi());
  eq.x_rn = risk_neutral_benchmark(dist, nu.power());
  eq.median = median_type(dist);

  auto fail = [](const std::string& what) {
    throw ConsistencyError("equilibrium_1d: " + what);
  };
  for (const auto* w : {&eq.weights_low, &eq.weights_high}) {
    for (double v : *w)
      if (!(v > 0.0 && v < 1.0)) fail(fmt::format("weight {:.17g} outside (0,1)", v));
    const double sum = std::accumulate(w->begin(), w->end(), 0.0);
    if (std::abs(sum - 1.0) > kIdentityTolerance)
      fail(fmt::format("weights sum to {:.17g}", sum));
  }
  const auto order = ascending(dist);
  const double x_first = dist[order.front()].bliss[0];
  const double x_last = dist[order.back()].bliss[0];
  if (!(x_first < eq.x_low && eq.x_low < eq.x_high && eq.x_high < x_last))
    fail(fmt::format("platform order violated: {} {} {} {}", x_first, eq.x_low,
                     eq.x_high, x_last));
  // The benchmark bracket relies on a concave U behind nu.
  if (nu.utility() && !(eq.x_low < eq.x_rn && eq.x_rn < eq.x_high))
    fail(fmt::format("benchmark {:.17g} not inside ({:.17g}, {:.17g})", eq.x_rn,
                     eq.x_low, eq.x_high));
  if (eq.support_ok) {
    for (Party party : {Party::kA, Party::kB}) {
      const double v = expected_payoff(dist, nu, shock, eq.pair(), party);
      if (std::abs(v - eq.payoff) > kIdentityTolerance)
        fail(fmt::format("integrated payoff {:.17g} for party {} differs from {:.17g}", v,
                         to_string(party), eq.payoff));
    }
  }
  return eq;
}

double risk_neutral_benchmark(const VoterDistribution& dist, const PowerMap& power) {
  require_line(dist, "risk_neutral_benchmark");
  const auto order = ascending(dist);
  const auto head = head_shares(dist, order);
  double x = 0.0;
  for (std::size_t p = 0; p < order.size(); ++p)
    x += (power(head[p + 1]) - power(head[p])) / power.total() * dist[order[p]].bliss[0];
  return x;
}

double median_type(const VoterDistribution& dist) {
  require_line(dist, "median_type");
  const auto order = ascending(dist);
  const auto head = head_shares(dist, order);
  for (std::size_t p = 0; p < order.size(); ++p) {
    const double x = dist[order[p]].bliss[0];
    if (std::abs(head[p + 1] - 0.5) <= kShareTolerance && p + 1 < order.size())
      return 0.5 * (x + dist[order[p + 1]].bliss[0]);
    if (head[p + 1] > 0.5) return x;
  }
  return dist[order.back()].bliss[0];
}

double payoff_gradient_bliss(const VoterDistribution& dist, const ReducedPayoff& nu,
                             const Shock& shock, std::size_t i, Party /*party*/) {
  if (i >= dist.size())
    throw PreconditionError(fmt::format("type index {} out of range", i));
  const auto eq = equilibrium_1d(dist, nu, shock);
  return eq.distance() * (eq.weights_high[i] - eq.weights_low[i]) / shock.phi();
}

GroupEffect classify_group(const VoterDistribution& dist, const ReducedPayoff& nu,
                           const Shock& shock, std::size_t i, Party party) {
  if (i >= dist.size())
    throw PreconditionError(fmt::format("type index {} out of range", i));
  const auto eq = equilibrium_1d(dist, nu, shock);
  const double x = dist[i].bliss[0];
  const double m = eq.median;
  if (party == Party::kA) {
    if (x > std::max(eq.x_low, m)) return GroupEffect::kAttract;
    if (x < std::min(eq.x_low, m)) return GroupEffect::kAlienate;
  } else {
    if (x < std::min(eq.x_high, m)) return GroupEffect::kAttract;
    if (x > std::max(eq.x_high, m)) return GroupEffect::kAlienate;
  }
  return GroupEffect::kUnclassified;
}

VoterDistribution center_at_median(const VoterDistribution& dist) {
  return dist.translated(Point::Constant(1, -median_type(dist)));
}

MedianSplit split_at_median(const VoterDistribution& dist) {
  const double m = median_type(dist);
  MedianSplit out;
  double below = 0.0;
  double above = 0.0;
  for (const auto& t : dist.types()) {
    const double x = t.bliss[0];
    if (x < m) {
      out.left_values.push_back(x);
      out.left_mass.push_back(t.share);
      below += t.share;
    } else if (x > m) {
      out.right_values.push_back(x);
      out.right_mass.push_back(t.share);
      above += t.share;
    }
  }
  const double m_minus = std::max(0.0, 0.5 - below);
  const double m_plus = std::max(0.0, 0.5 - above);
  if (m_minus > kShareTolerance) {
    out.left_values.push_back(m);
    out.left_mass.push_back(m_minus);
  }
  if (m_plus > kShareTolerance) {
    out.right_values.push_back(m);
    out.right_mass.push_back(m_plus);
  }
  return out;
}

bool is_spread(const VoterDistribution& base, const VoterDistribution& candidate) {
  require_line(base, "is_spread");
  require_line(candidate, "is_spread");
  const auto b = split_at_median(base);
  const auto c = split_at_median(candidate);
  const auto left = dominates({b.left_values, b.left_mass}, {c.left_values, c.left_mass});
  const auto right =
      dominates({c.right_values, c.right_mass}, {b.right_values, b.right_mass});
  return left.weak && right.weak && (left.strict || right.strict);
}

SpreadComparison spread_payoff_compare(const VoterDistribution& base,
                                       const VoterDistribution& candidate,
                                       const ReducedPayoff& nu, const Shock& shock) {
  if (!is_spread(center_at_median(base), center_at_median(candidate)))
    throw PreconditionError("spread_payoff_compare: candidate is not a spread of base");
  const auto eb = equilibrium_1d(base, nu, shock);
  const auto ec = equilibrium_1d(candidate, nu, shock);
  SpreadComparison out{eb.distance(), ec.distance(), eb.payoff, ec.payoff};
  if (!(out.candidate_distance > out.base_distance &&
        out.candidate_payoff > out.base_payoff))
    throw ConsistencyError(fmt::format(
        "spread did not raise distance/payoff: {:.17g}/{:.17g} -> {:.17g}/{:.17g}",
        out.base_distance, out.base_payoff, out.candidate_distance,
        out.candidate_payoff));
  return out;
}

}  // namespace polarity
