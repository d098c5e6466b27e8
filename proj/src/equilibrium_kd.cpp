#include "polarity/equilibrium_kd.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include "polarity/equilibrium_1d.hpp"
#include "polarity/error.hpp"

namespace polarity {

namespace {

constexpr double kPayoffCrossCheck = 1e-8;
constexpr double kDistanceTieTolerance = 1e-9;
constexpr double kSymmetryTolerance = 1e-9;
constexpr double kImprovement = 1e-12;

void require_cap(const VoterDistribution& dist, const EnumerationOptions& opts,
                 const char* op) {
  if (dist.size() > opts.factorial_cap)
    throw PreconditionError(fmt::format(
        "{}: {} types exceed the factorial cap {}; use br_dynamics or "
        "ranking_fixed_point",
        op, dist.size(), opts.factorial_cap));
}

void require_dims(const VoterDistribution& dist, const Point& x, const char* op) {
  if (x.size() != dist.dimension())
    throw PreconditionError(fmt::format("{}: platform dimension {} vs K = {}", op,
                                        x.size(), dist.dimension()));
}

double identity_payoff(const ReducedPayoff& nu, const Shock& shock, double distance_sq) {
  return 0.5 * (nu(1.0) + nu(0.0)) + distance_sq / (2.0 * shock.phi());
}

// Visits every permutation in lexicographic order, split into blocks by the
// first element so workers can share the load; results merge in block order.
template <typename Result, typename Visit>
std::vector<Result> for_each_permutation(std::size_t n, unsigned threads, Visit visit) {
  std::vector<std::vector<Result>> blocks(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t first = next++; first < n; first = next++) {
      Ranking rest;
      for (std::size_t i = 0; i < n; ++i)
        if (i != first) rest.push_back(i);
      Ranking r(n);
      do {
        r[0] = first;
        std::copy(rest.begin(), rest.end(), r.begin() + 1);
        visit(r, blocks[first]);
      } while (std::next_permutation(rest.begin(), rest.end()));
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, n));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::vector<Result> out;
  for (auto& b : blocks) out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::optional<std::size_t> mirror_partner(const VoterDistribution& dist,
                                          const Point& center, std::size_t i) {
  const Point target = 2.0 * center - dist[i].bliss;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    if ((dist[j].bliss - target).lpNorm<Eigen::Infinity>() <= kSymmetryTolerance &&
        std::abs(dist[j].share - dist[i].share) <= kSymmetryTolerance)
      return j;
  }
  return std::nullopt;
}

bool is_self_consistent(const Ranking& r, const VoterDistribution& dist,
                        const ReducedPayoff& nu, RankedPlatforms* out = nullptr) {
  auto p = platforms_for_ranking(r, dist, nu);
  const auto induced = induced_ranking({p.x_high, p.x_low}, dist);
  const bool ok = induced && *induced == r;
  if (out) *out = std::move(p);
  return ok;
}

}  // namespace

std::optional<Ranking> induced_ranking(const PlatformPair& pair,
                                       const VoterDistribution& dist, double tol) {
  std::vector<double> d(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) d[i] = delta(pair, dist[i].bliss);
  Ranking r(dist.size());
  std::iota(r.begin(), r.end(), 0);
  std::stable_sort(r.begin(), r.end(),
                   [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  for (std::size_t p = 1; p < r.size(); ++p)
    if (d[r[p]] - d[r[p - 1]] < tol) return std::nullopt;
  return r;
}

RankedPlatforms platforms_for_ranking(const Ranking& ranking,
                                      const VoterDistribution& dist,
                                      const ReducedPayoff& nu) {
  nu.require_strictly_concave("platforms_for_ranking");
  const std::size_t n = dist.size();
  if (ranking.size() != n)
    throw PreconditionError(fmt::format("ranking has {} entries for {} types",
                                        ranking.size(), n));
  std::vector<bool> seen(n, false);
  for (auto i : ranking) {
    if (i >= n || seen[i]) throw PreconditionError("ranking is not a permutation");
    seen[i] = true;
  }
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t p = n; p-- > 0;) tail[p] = tail[p + 1] + dist[ranking[p]].share;
  tail[0] = 1.0;

  RankedPlatforms out;
  out.x_high = Point::Zero(dist.dimension());
  out.x_low = Point::Zero(dist.dimension());
  out.weights_high.resize(n);
  out.weights_low.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double hi = nu(tail[p]) - nu(tail[p + 1]);
    const double lo = nu(1.0 - tail[p + 1]) - nu(1.0 - tail[p]);
    out.weights_high[p] = hi;
    out.weights_low[p] = lo;
    out.x_high += hi * dist[ranking[p]].bliss;
    out.x_low += lo * dist[ranking[p]].bliss;
  }
  return out;
}

std::vector<LocalEquilibrium> enumerate_local_equilibria(const VoterDistribution& dist,
                                                         const ReducedPayoff& nu,
                                                         const Shock& shock,
                                                         const EnumerationOptions& opts) {
  require_cap(dist, opts, "enumerate_local_equilibria");
  nu.require_strictly_concave("enumerate_local_equilibria");
  if (dist.size() < 2) return {};

  auto visit = [&](const Ranking& r, std::vector<LocalEquilibrium>& sink) {
    RankedPlatforms p;
    if (!is_self_consistent(r, dist, nu, &p)) return;
    LocalEquilibrium eq;
    eq.pair = {p.x_high, p.x_low};
    eq.ranking = r;
    eq.distance_sq = (p.x_high - p.x_low).squaredNorm();
    eq.payoff = identity_payoff(nu, shock, eq.distance_sq);
    for (const auto& t : dist.types())
      if (std::abs(delta(eq.pair, t.bliss)) > shock.phi()) eq.interior = false;
    if (eq.interior) {
      for (Party party : {Party::kA, Party::kB}) {
        const double v = expected_payoff(dist, nu, shock, eq.pair, party);
        if (std::abs(v - eq.payoff) > kPayoffCrossCheck)
          throw ConsistencyError(fmt::format(
              "local equilibrium payoff {:.17g} vs integrated {:.17g} (party {})",
              eq.payoff, v, to_string(party)));
      }
    }
    sink.push_back(std::move(eq));
  };
  return for_each_permutation<LocalEquilibrium>(dist.size(), opts.threads, visit);
}

Point best_response(const Point& opponent, const VoterDistribution& dist,
                    const ReducedPayoff& nu, const Shock& shock, Party party,
                    const EnumerationOptions& opts) {
  require_cap(dist, opts, "best_response");
  require_dims(dist, opponent, "best_response");
  struct Candidate {
    Point x;
    double value;
  };
  auto visit = [&](const Ranking& r, std::vector<Candidate>& sink) {
    const auto p = platforms_for_ranking(r, dist, nu);
    for (const Point* x : {&p.x_high, &p.x_low}) {
      const PlatformPair pair =
          party == Party::kA ? PlatformPair{*x, opponent} : PlatformPair{opponent, *x};
      const double v = expected_payoff(dist, nu, shock, pair, party);
      if (sink.empty() || v > sink.back().value + kImprovement)
        sink.assign(1, {*x, v});
    }
  };
  const auto best =
      for_each_permutation<Candidate>(dist.size(), opts.threads, visit);
  // One winner per first-element block, in lexicographic block order.
  const Candidate* winner = &best.front();
  for (const auto& c : best)
    if (c.value > winner->value + kImprovement) winner = &c;
  return winner->x;
}

BrTrajectory br_dynamics(const PlatformPair& start, const VoterDistribution& dist,
                         const ReducedPayoff& nu, const Shock& shock,
                         std::size_t max_iters, const EnumerationOptions& opts) {
  require_dims(dist, start.a, "br_dynamics");
  require_dims(dist, start.b, "br_dynamics");
  BrTrajectory out;
  out.symmetric = is_symmetric(dist);
  if (!out.symmetric)
    out.warning = "distribution is not symmetric; monotonicity not asserted";
  const auto start_ranking = induced_ranking(start, dist);
  RankedPlatforms sp;
  const bool start_local =
      start_ranking && is_self_consistent(*start_ranking, dist, nu, &sp) &&
      (sp.x_high - start.a).norm() <= 1e-12 && (sp.x_low - start.b).norm() <= 1e-12;
  const bool check = out.symmetric && start_local && support_check(dist, shock).ok;
  const double start_sq = (start.a - start.b).squaredNorm();

  PlatformPair cur = start;
  out.steps.push_back(cur);
  std::size_t still = 0;
  for (std::size_t n = 1; n <= max_iters; ++n) {
    const Party mover = n % 2 == 1 ? Party::kA : Party::kB;
    const Point& opp = mover == Party::kA ? cur.b : cur.a;
    const Point br = best_response(opp, dist, nu, shock, mover, opts);
    PlatformPair moved = cur;
    (mover == Party::kA ? moved.a : moved.b) = br;
    const double now = expected_payoff(dist, nu, shock, cur, mover);
    const double then = expected_payoff(dist, nu, shock, moved, mover);
    if (then > now + kImprovement) {
      cur = moved;
      still = 0;
    } else {
      ++still;
    }
    out.steps.push_back(cur);
    if (check && (cur.a - cur.b).squaredNorm() < start_sq - 1e-12) {
      out.monotone = false;
      throw ConsistencyError(
          fmt::format("best-response distance fell below its start at step {}", n));
    }
    if (still >= 2) {
      out.converged = true;
      break;
    }
  }
  out.terminal = cur;
  return out;
}

NashReport party_preferred(const VoterDistribution& dist, const ReducedPayoff& nu,
                           const Shock& shock, const EnumerationOptions& opts) {
  if (!is_symmetric(dist))
    throw PreconditionError("party_preferred: distribution is not symmetric");
  NashReport out;
  out.inventory = enumerate_local_equilibria(dist, nu, shock, opts);
  for (const auto& eq : out.inventory)
    out.max_distance_sq = std::max(out.max_distance_sq, eq.distance_sq);
  for (const auto& eq : out.inventory)
    if (eq.distance_sq >= out.max_distance_sq - kDistanceTieTolerance)
      out.preferred.push_back(eq);
  if (out.preferred.empty())
    throw ConsistencyError("party_preferred: no local equilibrium found");
  return out;
}

bool is_symmetric(const VoterDistribution& dist) {
  const Point m = dist.mean();
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (!mirror_partner(dist, m, i)) return false;
  return true;
}

std::optional<std::size_t> divide_position(const Ranking& ranking,
                                           const VoterDistribution& dist) {
  double below = 0.0;
  for (std::size_t p = 0; p < ranking.size(); ++p) {
    const double s = dist[ranking[p]].share;
    const double above = 1.0 - below - s;
    if (below < 0.5 - kShareTolerance && above < 0.5 - kShareTolerance) return p;
    below += s;
  }
  return std::nullopt;
}

double local_divide_gradient(const Ranking& ranking, const VoterDistribution& dist,
                             const ReducedPayoff& nu, const Shock& shock,
                             std::size_t position, std::size_t dim) {
  if (position >= dist.size())
    throw PreconditionError(fmt::format("position {} out of range", position));
  if (dim >= static_cast<std::size_t>(dist.dimension()))
    throw PreconditionError(fmt::format("dimension {} out of range", dim));
  RankedPlatforms p;
  if (!is_self_consistent(ranking, dist, nu, &p))
    throw PreconditionError("local_divide_gradient: ranking is not a local equilibrium");
  return (p.weights_high[position] - p.weights_low[position]) / shock.phi() *
         (p.x_high[dim] - p.x_low[dim]);
}

FixedPointResult ranking_fixed_point(const VoterDistribution& dist,
                                     const ReducedPayoff& nu, const Shock& shock,
                                     const Point& direction, std::size_t max_iters) {
  require_dims(dist, direction, "ranking_fixed_point");
  Ranking r(dist.size());
  std::iota(r.begin(), r.end(), 0);
  std::stable_sort(r.begin(), r.end(), [&](std::size_t a, std::size_t b) {
    return dist[a].bliss.dot(direction) < dist[b].bliss.dot(direction);
  });
  FixedPointResult out;
  std::set<Ranking> seen;
  while (out.iterations < max_iters) {
    ++out.iterations;
    const auto p = platforms_for_ranking(r, dist, nu);
    const PlatformPair pair{p.x_high, p.x_low};
    const auto next = induced_ranking(pair, dist);
    if (!next) break;
    if (*next == r) {
      LocalEquilibrium eq;
      eq.pair = pair;
      eq.ranking = r;
      eq.distance_sq = (p.x_high - p.x_low).squaredNorm();
      eq.payoff = identity_payoff(nu, shock, eq.distance_sq);
      for (const auto& t : dist.types())
        if (std::abs(delta(pair, t.bliss)) > shock.phi()) eq.interior = false;
      out.equilibrium = std::move(eq);
      break;
    }
    if (!seen.insert(r).second) {
      out.cycled = true;
      break;
    }
    r = *next;
  }
  return out;
}

VoterDistribution project_onto(const VoterDistribution& dist, const Point& d) {
  require_dims(dist, d, "project_onto");
  if (!(d.norm() > 0.0)) throw PreconditionError("project_onto: zero direction");
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> z(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) z[i] = dist[i].bliss.dot(d);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return z[a] < z[b]; });
  std::vector<VoterType> merged;
  for (auto i : order) {
    if (!merged.empty()) {
      const double last = merged.back().bliss[0];
      if (std::abs(z[i] - last) <= 1e-12 * std::max(1.0, std::abs(last))) {
        merged.back().share += dist[i].share;
        merged.back().label += "+" + dist[i].label;
        continue;
      }
    }
    merged.push_back({Point::Constant(1, z[i]), dist[i].share, dist[i].label});
  }
  return VoterDistribution(std::move(merged));
}

bool is_d_spread(const VoterDistribution& base, const VoterDistribution& candidate,
                 const Point& d) {
  if (base.dimension() != candidate.dimension())
    throw PreconditionError("is_d_spread: dimensions differ");
  return is_spread(project_onto(base, d), project_onto(candidate, d));
}

DSpreadComparison d_spread_payoff_compare(const VoterDistribution& base,
                                          const VoterDistribution& candidate,
                                          const ReducedPayoff& nu, const Shock& shock,
                                          const EnumerationOptions& opts) {
  if (!is_symmetric(base) || !is_symmetric(candidate))
    throw PreconditionError("d_spread_payoff_compare: both distributions must be symmetric");
  const auto nb = party_preferred(base, nu, shock, opts);
  DSpreadComparison out;
  out.direction = nb.preferred.front().pair.a - nb.preferred.front().pair.b;
  if (!is_d_spread(base, candidate, out.direction))
    throw PreconditionError(
        "d_spread_payoff_compare: candidate is not a d-spread along the equilibrium "
        "direction");
  const auto nc = party_preferred(candidate, nu, shock, opts);
  out.base_distance_sq = nb.max_distance_sq;
  out.candidate_distance_sq = nc.max_distance_sq;
  out.base_payoff = nb.preferred.front().payoff;
  out.candidate_payoff = nc.preferred.front().payoff;
  if (!(out.candidate_payoff > out.base_payoff))
    throw ConsistencyError(fmt::format("d-spread did not raise payoff: {:.17g} -> {:.17g}",
                                       out.base_payoff, out.candidate_payoff));
  return out;
}

VoterDistribution coherence_swap(const VoterDistribution& dist, const Point& d) {
  require_dims(dist, d, "coherence_swap");
  if (!is_symmetric(dist))
    throw PreconditionError("coherence_swap: distribution must be symmetric");
  const Point m = dist.mean();
  auto types = dist.types();
  std::size_t moved = 0;
  for (int k = 0; k < dist.dimension(); ++k) {
    for (std::size_t i = 0; i < types.size(); ++i) {
      const auto j = mirror_partner(VoterDistribution(types), m, i);
      if (!j || *j <= i) continue;
      Point xi = types[i].bliss;
      Point xj = types[*j].bliss;
      std::swap(xi[k], xj[k]);
      const double before = std::abs((types[i].bliss - m).dot(d));
      const double after = std::abs((xi - m).dot(d));
      if (!(after > before + 1e-12)) continue;
      bool clash = false;
      for (std::size_t q = 0; q < types.size(); ++q)
        if (q != i && q != *j && (types[q].bliss == xi || types[q].bliss == xj))
          clash = true;
      if (clash) continue;
      types[i].bliss = xi;
      types[*j].bliss = xj;
      ++moved;
    }
  }
  if (moved == 0)
    throw PreconditionError("coherence_swap: no coordinate swap moves types outward");
  return VoterDistribution(std::move(types));
}

}  // namespace polarity
