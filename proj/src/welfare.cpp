#include "polarity/welfare.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "polarity/equilibrium_1d.hpp"
#include "polarity/error.hpp"
#include "polarity/foundations.hpp"

namespace polarity {

namespace {

constexpr double kWelfareTolerance = 1e-10;

double realized_welfare(double x, const VoterDistribution& dist) {
  double w = 0.0;
  for (const auto& t : dist.types()) {
    const double gap = x - t.bliss[0];
    w -= t.share * gap * gap;
  }
  return w;
}

}  // namespace

PolicyLottery policy_lottery(const PlatformPair& pair, const VoterDistribution& dist,
                             const PowerMap& power, const Shock& shock) {
  if (dist.dimension() != 1)
    throw PreconditionError(
        fmt::format("policy_lottery needs K = 1, got {}", dist.dimension()));
  PolicyLottery out;
  out.x_a = pair.a[0];
  out.x_b = pair.b[0];
  const double gap = out.x_a - out.x_b;
  double mass = 0.0;
  for (const auto& iv : share_lottery(dist, shock, pair)) {
    const double lambda = power(iv.share_a) / power.total();
    out.outcomes.push_back({out.x_b + lambda * gap, lambda, iv.probability});
    mass += iv.probability;
  }
  if (std::abs(mass - 1.0) > kShareTolerance)
    throw ConsistencyError(fmt::format("lottery mass {:.17g} is not 1", mass));
  for (const auto& o : out.outcomes) out.mean += o.probability * o.policy;
  for (const auto& o : out.outcomes)
    out.variance += o.probability * (o.policy - out.mean) * (o.policy - out.mean);
  return out;
}

WelfareReport welfare_decomposition(const PolicyLottery& lottery,
                                    const VoterDistribution& dist) {
  if (dist.dimension() != 1)
    throw PreconditionError("welfare_decomposition needs K = 1");
  WelfareReport r;
  for (const auto& t : dist.types()) r.x_opt += t.share * t.bliss[0];
  r.w_opt = realized_welfare(r.x_opt, dist);
  r.mean = lottery.mean;
  r.bias_sq = (lottery.mean - r.x_opt) * (lottery.mean - r.x_opt);
  r.variance = lottery.variance;
  r.w_star = r.w_opt - r.bias_sq - r.variance;
  for (const auto& o : lottery.outcomes)
    r.w_direct += o.probability * realized_welfare(o.policy, dist);
  if (std::abs(r.w_star - r.w_direct) > kWelfareTolerance)
    throw ConsistencyError(fmt::format(
        "welfare decomposition {:.17g} differs from direct expectation {:.17g}",
        r.w_star, r.w_direct));
  return r;
}

PremiumSweep premium_sweep(const VoterDistribution& dist, const PowerUtility& utility,
                           double rho_bar, const std::vector<double>& premiums,
                           const Shock& shock, unsigned threads) {
  if (dist.dimension() != 1) throw PreconditionError("premium_sweep needs K = 1");
  const double cap = rho_bar * kMaxPremiumFraction;
  for (double p : premiums)
    if (!(p >= 0.0 && p <= cap * (1.0 + 1e-15)))
      throw PreconditionError(
          fmt::format("premium {:.17g} outside [0, {:.17g}]", p, cap));

  PremiumSweep out;
  out.median = median_type(dist);
  std::size_t median_index = dist.size();
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist[i].bliss[0] == out.median) median_index = i;
  out.median_mass = median_index < dist.size() ? dist[median_index].share : 0.0;
  out.limit_checked = out.median_mass > 0.0;
  if (!out.limit_checked)
    out.warnings.push_back("median type has zero mass; limit assertions skipped");
  for (const auto& t : dist.types()) out.x_opt += t.share * t.bliss[0];
  out.w_opt = realized_welfare(out.x_opt, dist);
  out.limit_welfare = out.w_opt - (out.median - out.x_opt) * (out.median - out.x_opt);

  out.rows.resize(premiums.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < premiums.size(); k = next++) {
      const auto power = majority_premium_power(rho_bar, premiums[k]);
      const auto nu = compose_nu(utility, power);
      const auto eq = equilibrium_1d(dist, nu, shock);
      const auto lottery = policy_lottery(eq.pair(), dist, power, shock);
      const auto w = welfare_decomposition(lottery, dist);
      auto& row = out.rows[k];
      row = {premiums[k], eq.x_low,  eq.x_high,  eq.distance(),
             w.mean,      w.variance, w.bias_sq, w.w_star};
      if (median_index < dist.size()) {
        row.median_weight_high = eq.weights_high[median_index];
        row.median_weight_low = eq.weights_low[median_index];
      }
    }
  };
  const unsigned workers =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(premiums.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (out.limit_checked) {
    std::vector<std::size_t> order(out.rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return out.rows[a].rho_m < out.rows[b].rho_m;
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
      const auto& lo = out.rows[order[k - 1]];
      const auto& hi = out.rows[order[k]];
      if (hi.median_weight_high < lo.median_weight_high - 1e-12 ||
          hi.median_weight_low < lo.median_weight_low - 1e-12)
        throw ConsistencyError(fmt::format(
            "median weight fell between premiums {:.17g} and {:.17g}", lo.rho_m,
            hi.rho_m));
    }
  }
  return out;
}

}  // namespace polarity
