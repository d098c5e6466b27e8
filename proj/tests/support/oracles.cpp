#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polarity/foundations.hpp"

namespace oracle {

namespace {

std::vector<double> deltas(const VoterDistribution& dist, const PlatformPair& pair) {
  std::vector<double> d;
  for (const auto& t : dist.types())
    d.push_back((pair.b - t.bliss).squaredNorm() - (pair.a - t.bliss).squaredNorm());
  return d;
}

double cdf(double e, const Shock& shock) {
  return std::clamp((e + shock.phi()) / (2.0 * shock.phi()), 0.0, 1.0);
}

}  // namespace

double payoff_a(const VoterDistribution& dist, const ReducedPayoff& nu, const Shock& shock,
                const PlatformPair& pair) {
  const auto d = deltas(dist, pair);
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return d[x] > d[y]; });
  double v = nu(0.0);
  double top = 0.0;
  for (auto i : order) {
    const double next = top + dist[i].share;
    v += cdf(d[i], shock) * (nu(std::min(next, 1.0)) - nu(top));
    top = next;
  }
  return v;
}

std::vector<Cell> share_cells(const VoterDistribution& dist, const Shock& shock,
                              const PlatformPair& pair) {
  const auto d = deltas(dist, pair);
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return d[x] > d[y]; });
  std::vector<Cell> cells;
  // eps above the largest delta: nobody votes A.
  cells.push_back({0.0, 1.0 - cdf(d[order[0]], shock)});
  double top = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    top += dist[order[k]].share;
    const double upper = cdf(d[order[k]], shock);
    const double lower = k + 1 < order.size() ? cdf(d[order[k + 1]], shock) : 0.0;
    cells.push_back({std::min(top, 1.0), upper - lower});
  }
  return cells;
}

double expected_welfare(const VoterDistribution& dist, const ReducedPayoff& nu,
                        const Shock& shock, const PlatformPair& pair) {
  const auto& power = nu.power();
  double w = 0.0;
  for (const auto& c : share_cells(dist, shock, pair)) {
    const double lambda = power(c.share_a) / power.total();
    const double x = pair.b[0] + lambda * (pair.a[0] - pair.b[0]);
    double realized = 0.0;
    for (const auto& t : dist.types()) realized -= t.share * (x - t.bliss[0]) * (x - t.bliss[0]);
    w += c.probability * realized;
  }
  return w;
}

GridBest grid_best_response_1d(const VoterDistribution& dist, const ReducedPayoff& nu,
                               const Shock& shock, double opponent, double lo, double hi,
                               int points) {
  auto f = [&](double x) {
    return payoff_a(dist, nu, shock,
                    {Point::Constant(1, x), Point::Constant(1, opponent)});
  };
  GridBest best{lo, f(lo)};
  const double step = (hi - lo) / (points - 1);
  for (int j = 1; j < points; ++j) {
    const double x = lo + step * j;
    const double v = f(x);
    if (v > best.payoff) best = {x, v};
  }
  double a = best.x - step, b = best.x + step;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100; ++it) {
    const double c = b - g * (b - a), e = a + g * (b - a);
    if (f(c) > f(e)) b = e; else a = c;
  }
  const double x = 0.5 * (a + b);
  if (f(x) > best.payoff) best = {x, f(x)};
  return best;
}

std::vector<double> Generator::shares(std::size_t n) {
  std::vector<double> w(n);
  for (auto& v : w) v = uniform(0.2, 1.0);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= total;
  // Absorb rounding into the last share so the sum is exactly representable.
  w.back() = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);
  return w;
}

Point Generator::point(int dim) {
  Point p(dim);
  for (int k = 0; k < dim; ++k) p[k] = uniform(-1.0, 1.0);
  return p;
}

bool Generator::separated(const std::vector<Point>& pts, const Point& p) const {
  return std::all_of(pts.begin(), pts.end(),
                     [&](const Point& q) { return (q - p).norm() >= 0.05; });
}

VoterDistribution Generator::line(std::size_t n) { return general(n, 1); }

VoterDistribution Generator::general(std::size_t n, int dim) {
  std::vector<Point> pts;
  while (pts.size() < n) {
    const Point p = point(dim);
    if (separated(pts, p)) pts.push_back(p);
  }
  const auto w = shares(n);
  std::vector<polarity::VoterType> types;
  for (std::size_t i = 0; i < n; ++i) types.push_back({pts[i], w[i], ""});
  return VoterDistribution(std::move(types));
}

VoterDistribution Generator::symmetric(std::size_t n, int dim) {
  const std::size_t pairs = n / 2;
  const bool center = n % 2 == 1;
  std::vector<Point> pts;
  if (center) pts.push_back(Point::Zero(dim));
  while (pts.size() < (center ? 1 : 0) + 2 * pairs) {
    const Point p = point(dim);
    if (p.norm() < 0.05 || !separated(pts, p) || !separated(pts, -p)) continue;
    pts.push_back(p);
    pts.push_back(-p);
  }
  auto w = shares(pairs + (center ? 1 : 0));
  std::vector<polarity::VoterType> types;
  std::size_t k = 0;
  if (center) types.push_back({pts[k++], w.back(), ""});
  for (std::size_t j = 0; j < pairs; ++j) {
    types.push_back({pts[k++], 0.5 * w[j], ""});
    types.push_back({pts[k++], 0.5 * w[j], ""});
  }
  if (!center) {
    // The last pair absorbs the rounding of the pair masses.
    double rest = 0.0;
    for (std::size_t i = 0; i + 2 < types.size(); ++i) rest += types[i].share;
    types[types.size() - 2].share = 0.5 * (1.0 - rest);
    types.back().share = 1.0 - rest - types[types.size() - 2].share;
  } else {
    double rest = 0.0;
    for (std::size_t i = 1; i < types.size(); ++i) rest += types[i].share;
    types[0].share = 1.0 - rest;
  }
  return VoterDistribution(std::move(types));
}

Shock Generator::covering_shock(const VoterDistribution& dist) {
  const double spread = (dist.coord_max() - dist.coord_min()).squaredNorm();
  return Shock(std::max(1.0, spread) * uniform(1.1, 3.0));
}

ReducedPayoff Generator::concave_nu() {
  static const char* names[] = {"quadratic", "sqrt-sharing", "placement-linear"};
  return polarity::nu_preset(names[index(0, 2)]);
}

}  // namespace oracle
