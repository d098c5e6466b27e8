#include "polarity/model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "polarity/error.hpp"

namespace polarity {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kCatchUpMargin = 1e-12;

double grid_point(double lo, double hi, int j) {
  return lo + (hi - lo) * static_cast<double>(j) / (kGridPoints - 1);
}

}  // namespace

const char* to_string(Party party) { return party == Party::kA ? "A" : "B"; }

Party other(Party party) { return party == Party::kA ? Party::kB : Party::kA; }

VoterDistribution::VoterDistribution(std::vector<VoterType> types)
    : types_(std::move(types)) {
  if (types_.empty()) throw PreconditionError("distribution has no types");
  const auto k = types_.front().bliss.size();
  if (k == 0) throw PreconditionError("bliss dimension must be at least 1");
  double total = 0.0;
  for (std::size_t i = 0; i < types_.size(); ++i) {
    auto& t = types_[i];
    if (t.label.empty()) t.label = fmt::format("t{}", i);
    if (t.bliss.size() != k)
      throw PreconditionError(
          fmt::format("type {} has dimension {}, expected {}", t.label,
                      t.bliss.size(), k));
    if (!t.bliss.allFinite())
      throw PreconditionError(fmt::format("type {} has non-finite bliss", t.label));
    if (!(t.share > 0.0 && t.share <= 1.0))
      throw PreconditionError(
          fmt::format("type {} share {} outside (0,1]", t.label, t.share));
    total += t.share;
  }
  if (std::abs(total - 1.0) > kShareTolerance)
    throw PreconditionError(fmt::format("shares sum to {:.17g}, not 1", total));
  for (std::size_t i = 0; i < types_.size(); ++i)
    for (std::size_t j = i + 1; j < types_.size(); ++j)
      if (types_[i].bliss == types_[j].bliss)
        throw PreconditionError(fmt::format("types {} and {} share a bliss point",
                                            types_[i].label, types_[j].label));
}

VoterDistribution VoterDistribution::line(const std::vector<double>& bliss,
                                          const std::vector<double>& shares) {
  if (bliss.size() != shares.size())
    throw PreconditionError("bliss and share lists differ in length");
  std::vector<VoterType> types;
  for (std::size_t i = 0; i < bliss.size(); ++i)
    types.push_back({Point::Constant(1, bliss[i]), shares[i], ""});
  return VoterDistribution(std::move(types));
}

Point VoterDistribution::mean() const {
  Point m = Point::Zero(dimension());
  for (const auto& t : types_) m += t.share * t.bliss;
  return m;
}

Point VoterDistribution::coord_max() const {
  Point m = types_.front().bliss;
  for (const auto& t : types_) m = m.cwiseMax(t.bliss);
  return m;
}

Point VoterDistribution::coord_min() const {
  Point m = types_.front().bliss;
  for (const auto& t : types_) m = m.cwiseMin(t.bliss);
  return m;
}

VoterDistribution VoterDistribution::translated(const Point& offset) const {
  auto types = types_;
  for (auto& t : types) t.bliss += offset;
  return VoterDistribution(std::move(types));
}

Shock::Shock(double phi) : phi_(phi) {
  if (!(phi > 0.0) || !std::isfinite(phi))
    throw PreconditionError(fmt::format("shock half-width {} must be positive", phi));
}

ShapeReport check_shape(const RealFn& f, double lo, double hi) {
  ShapeReport r;
  r.worst_slope = std::numeric_limits<double>::infinity();
  r.worst_curvature = -std::numeric_limits<double>::infinity();
  const double h = kDerivativeStep * (hi - lo);
  std::vector<double> values(kGridPoints);
  for (int j = 0; j < kGridPoints; ++j) values[j] = f(grid_point(lo, hi, j));

  for (int j = 0; j + 1 < kGridPoints; ++j) {
    if (!(values[j + 1] > values[j]) && r.increasing) {
      r.increasing = false;
      r.diagnostic += fmt::format("not strictly increasing at {:.6g}; ",
                                  grid_point(lo, hi, j));
    }
  }
  for (int j = 1; j + 1 < kGridPoints; ++j) {
    const double x = grid_point(lo, hi, j);
    const double fx = values[j];
    const double up = f(x + h);
    const double down = f(x - h);
    const double scale = std::max(1.0, std::abs(fx));
    const double slope = (up - down) / (2.0 * h);
    const double curvature = (up - 2.0 * fx + down) / (h * h);
    // Grid-scale second difference catches jumps that straddle grid points.
    const double chord = values[j - 1] - 2.0 * fx + values[j + 1];
    r.worst_slope = std::min(r.worst_slope, slope);
    r.worst_curvature = std::max(r.worst_curvature, curvature);
    if (r.increasing && !(slope > 4.0 * kEps * scale / h)) {
      r.increasing = false;
      r.diagnostic += fmt::format("derivative {:.6g} <= 0 at {:.6g}; ", slope, x);
    }
    if (r.strictly_concave &&
        !(curvature < -64.0 * kEps * scale / (h * h) && chord < -64.0 * kEps * scale)) {
      r.strictly_concave = false;
      r.diagnostic += fmt::format("second derivative {:.6g} not < 0 at {:.6g}; ",
                                  curvature, x);
    }
  }
  return r;
}

PowerMap::PowerMap(std::string name, double total, RealFn fn, double jump)
    : name_(std::move(name)), total_(total), fn_(std::move(fn)), jump_(jump) {
  if (!(total_ > 0.0)) throw PreconditionError("power total must be positive");
  if (!(jump_ >= 0.0 && jump_ < total_))
    throw PreconditionError(fmt::format("power jump {} outside [0, {})", jump_, total_));
  double prev = fn_(0.0);
  for (int j = 0; j < kGridPoints; ++j) {
    const double s = grid_point(0.0, 1.0, j);
    const double v = fn_(s);
    if (j > 0 && !(v > prev))
      throw PreconditionError(
          fmt::format("power map {} not strictly increasing at {:.6g}", name_, s));
    if (std::abs(v + fn_(1.0 - s) - total_) > 1e-10)
      throw PreconditionError(
          fmt::format("power map {} violates constant sum at {:.6g}", name_, s));
    prev = v;
  }
}

PowerMap PowerMap::proportional(double total) {
  return PowerMap("proportional", total, [total](double s) { return total * s; });
}

PowerUtility::PowerUtility(std::string name, RealFn fn, double domain_max)
    : name_(std::move(name)), fn_(std::move(fn)), domain_max_(domain_max) {
  if (!(domain_max_ > 0.0))
    throw PreconditionError("utility domain must have positive length");
  const auto shape = check_shape(fn_, 0.0, domain_max_);
  if (!shape.increasing || !shape.strictly_concave)
    throw PreconditionError(fmt::format("utility {} fails U' > 0, U'' < 0: {}",
                                        name_, shape.diagnostic));
}

ReducedPayoff::ReducedPayoff(std::string provenance, RealFn raw, PowerMap power,
                             std::optional<PowerUtility> utility, double raw_left,
                             double raw_right, bool normalize)
    : provenance_(std::move(provenance)),
      raw_(std::move(raw)),
      power_(std::move(power)),
      utility_(std::move(utility)),
      raw_left_(raw_left),
      raw_right_(raw_right) {
  if (normalize) {
    offset_ = raw_(0.0);
    scale_ = raw_(1.0) - offset_;
    if (!(scale_ > 0.0) || !std::isfinite(scale_))
      throw PreconditionError(fmt::format(
          "nu {} needs nu(1) - nu(0) > 0 to normalize, got {}", provenance_, scale_));
  }

  auto& d = diagnostics_;
  const RealFn nu = [this](double s) { return (*this)(s); };
  const auto shape = check_shape(nu, 0.0, 1.0);
  d.increasing = shape.increasing;
  d.strictly_concave = shape.strictly_concave && power_.jump() == 0.0;
  d.normalized = std::abs((*this)(1.0) - (*this)(0.0) - 1.0) <= kShareTolerance;
  if (!shape.diagnostic.empty()) d.diagnostic += shape.diagnostic;
  if (power_.jump() > 0.0) d.diagnostic += "jump at 1/2; ";

  // nu(s') - nu(s) > nu(1-s) - nu(1-s') for s < s' <= 1/2 is equivalent to
  // Gamma(s) = nu(s) + nu(1-s) strictly increasing on [0, 1/2].
  auto& cu = d.catch_up;
  const int half = (kGridPoints - 1) / 2;
  std::vector<double> gamma(half + 1);
  for (int j = 0; j <= half; ++j) {
    const double s = grid_point(0.0, 1.0, j);
    gamma[j] = (*this)(s) + (*this)(1.0 - s);
  }
  cu.worst_margin = std::numeric_limits<double>::infinity();
  double below_half = cu.worst_margin;  // worst step not touching s' = 1/2
  for (int j = 1; j <= half; ++j) {
    const double step = gamma[j] - gamma[j - 1];
    if (step < cu.worst_margin) {
      cu.worst_margin = step;
      cu.worst_at = grid_point(0.0, 1.0, j);
    }
    if (j < half) below_half = std::min(below_half, step);
  }
  cu.holds = cu.worst_margin > kCatchUpMargin;
  const bool prefix_ok = below_half > kCatchUpMargin;
  cu.left_limit_holds =
      prefix_ok && 2.0 * left_of_half() - gamma[half - 1] > kCatchUpMargin;
  cu.right_limit_holds =
      prefix_ok && 2.0 * right_of_half() - gamma[half - 1] > kCatchUpMargin;
  if (!cu.holds)
    d.diagnostic += fmt::format(
        "catch-up inequality fails near s = {:.6g} (margin {:.3g}); ", cu.worst_at,
        cu.worst_margin);
}

ReducedPayoff ReducedPayoff::direct(std::string name, RealFn fn, bool normalize) {
  const double mid = fn(0.5);
  return ReducedPayoff(std::move(name), std::move(fn), PowerMap::proportional(1.0),
                       std::nullopt, mid, mid, normalize);
}

ReducedPayoff ReducedPayoff::composed(const PowerUtility& utility,
                                      const PowerMap& power, bool normalize) {
  if (power.total() > utility.domain_max() * (1.0 + 1e-12))
    throw PreconditionError(fmt::format(
        "power total {} exceeds utility domain {}", power.total(), utility.domain_max()));
  const RealFn u = utility.fn();
  RealFn raw = [u, power](double s) { return u(power(s)); };
  const double left = u(power.left_of_half());
  const double right = u(power.right_of_half());
  return ReducedPayoff(utility.name() + " o " + power.name(), std::move(raw), power,
                       utility, left, right, normalize);
}

double ReducedPayoff::operator()(double s) const {
  s = std::clamp(s, 0.0, 1.0);
  return (raw_(s) - offset_) / scale_;
}

double ReducedPayoff::left_of_half() const { return (raw_left_ - offset_) / scale_; }

double ReducedPayoff::right_of_half() const { return (raw_right_ - offset_) / scale_; }

void ReducedPayoff::require_normalized(const char* op) const {
  if (!diagnostics_.normalized)
    throw PreconditionError(fmt::format("{}: nu must satisfy nu(1) - nu(0) = 1", op));
  if (!diagnostics_.increasing)
    throw PreconditionError(
        fmt::format("{}: nu must be strictly increasing: {}", op, diagnostics_.diagnostic));
}

void ReducedPayoff::require_catch_up(const char* op) const {
  require_normalized(op);
  if (!diagnostics_.catch_up.holds)
    throw PreconditionError(fmt::format("{}: {}", op, diagnostics_.diagnostic));
}

void ReducedPayoff::require_strictly_concave(const char* op) const {
  require_normalized(op);
  if (!diagnostics_.strictly_concave)
    throw PreconditionError(
        fmt::format("{}: nu must be strictly concave: {}", op, diagnostics_.diagnostic));
}

double delta(const PlatformPair& pair, const Point& bliss) {
  if (pair.a.size() != bliss.size() || pair.b.size() != bliss.size())
    throw PreconditionError(fmt::format("platform dimensions {}/{} vs bliss {}",
                                        pair.a.size(), pair.b.size(), bliss.size()));
  return (pair.b - bliss).squaredNorm() - (pair.a - bliss).squaredNorm();
}

double vote_prob(double delta, const Shock& shock) {
  return std::clamp(0.5 + delta / (2.0 * shock.phi()), 0.0, 1.0);
}

SupportReport support_check(const VoterDistribution& dist, const Shock& shock) {
  SupportReport r;
  const double spread = (dist.coord_max() - dist.coord_min()).squaredNorm();
  r.extreme_delta = spread;
  // The two extreme differences are -spread and +spread.
  if (-spread < -shock.phi()) {
    r.ok = false;
    r.diagnostic += fmt::format("lower extreme {:.17g} below -phi = {:.17g}; ",
                                -spread, -shock.phi());
  }
  if (spread > shock.phi()) {
    r.ok = false;
    r.diagnostic += fmt::format("upper extreme {:.17g} above phi = {:.17g}; ", spread,
                                shock.phi());
  }
  return r;
}

std::vector<ShareInterval> share_lottery(const VoterDistribution& dist,
                                         const Shock& shock,
                                         const PlatformPair& pair) {
  const std::size_t n = dist.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = delta(pair, dist[i].bliss);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return d[x] < d[y]; });

  // Blocks of types whose adjacent deltas differ by less than kTieTolerance.
  std::vector<double> block_delta;
  std::vector<double> block_share;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    if (k > 0 && d[i] - d[order[k - 1]] < kTieTolerance) {
      block_share.back() += dist[i].share;
      continue;
    }
    block_delta.push_back(d[i]);
    block_share.push_back(dist[i].share);
  }
  const std::size_t m = block_delta.size();
  std::vector<double> tail(m + 1, 0.0);
  for (std::size_t b = m; b-- > 0;) tail[b] = tail[b + 1] + block_share[b];
  tail[0] = 1.0;

  // On (e_{b-1}, e_b) the types voting A are exactly blocks b..m-1.
  std::vector<ShareInterval> out;
  const double phi = shock.phi();
  double left = -phi;
  for (std::size_t b = 0; b <= m; ++b) {
    const double right = b < m ? std::clamp(block_delta[b], -phi, phi) : phi;
    if (right > left)
      out.push_back({std::clamp(tail[b], 0.0, 1.0), (right - left) / (2.0 * phi)});
    left = std::max(left, right);
  }
  return out;
}

double expected_payoff(const VoterDistribution& dist, const ReducedPayoff& nu,
                       const Shock& shock, const PlatformPair& pair, Party party) {
  double v = 0.0;
  for (const auto& iv : share_lottery(dist, shock, pair)) {
    const double s = party == Party::kA ? iv.share_a : 1.0 - iv.share_a;
    v += nu(s) * iv.probability;
  }
  return v;
}

double mc_payoff(const VoterDistribution& dist, const ReducedPayoff& nu,
                 const Shock& shock, const PlatformPair& pair, Party party,
                 std::uint64_t n_draws, std::uint64_t seed) {
  if (n_draws < 1) throw PreconditionError("mc_payoff needs at least one draw");
  std::vector<double> d(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) d[i] = delta(pair, dist[i].bliss);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> eps(-shock.phi(), shock.phi());
  std::map<double, double> memo;
  double total = 0.0;
  for (std::uint64_t k = 0; k < n_draws; ++k) {
    const double e = eps(rng);
    double s_a = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d[i] >= e) s_a += dist[i].share;
    const double s = party == Party::kA ? s_a : 1.0 - s_a;
    auto it = memo.find(s);
    if (it == memo.end()) it = memo.emplace(s, nu(s)).first;
    total += it->second;
  }
  return total / static_cast<double>(n_draws);
}

}  // namespace polarity
