#include "polarity/foundations.hpp"

#include <fmt/format.h>

#include <cmath>

#include "polarity/error.hpp"

namespace polarity {

double simpson(const RealFn& f, double a, double b, int panels) {
  if (panels < 2 || panels % 2 != 0)
    throw PreconditionError("Simpson rule needs an even panel count");
  if (b == a) return 0.0;
  const double h = (b - a) / panels;
  double odd = 0.0;
  double even = 0.0;
  for (int j = 1; j < panels; ++j) {
    const double v = f(a + j * h);
    (j % 2 ? odd : even) += v;
  }
  return h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b));
}

PowerUtility u_from_placements(const PlacementProfile& p) {
  if (!p.value) throw PreconditionError("placement profile has no value function");
  if (!(p.rho_bar > 0.0) || !(p.capacity >= p.rho_bar))
    throw PreconditionError(fmt::format(
        "placement capacity {} must be at least rho_bar {} > 0", p.capacity, p.rho_bar));
  double prev = p.value(0.0);
  for (int j = 1; j < kGridPoints; ++j) {
    const double k = p.capacity * j / (kGridPoints - 1);
    const double v = p.value(k);
    if (!(v < prev))
      throw PreconditionError(
          fmt::format("placement value not strictly decreasing at k = {:.6g}", k));
    prev = v;
  }
  const RealFn q = p.value;
  return PowerUtility("placements",
                      [q](double r) { return simpson(q, 0.0, r); }, p.rho_bar);
}

PowerUtility u_from_rent_sharing(const RentSharingProfile& r) {
  if (r.insiders < 1)
    throw PreconditionError(fmt::format("insider count {} below 1", r.insiders));
  if (!r.insider_utility) throw PreconditionError("rent-sharing profile has no utility");
  const double n = r.insiders;
  // Validates u itself on the per-insider range.
  PowerUtility u(r.name, r.insider_utility, r.rho_bar / n);
  const RealFn fn = r.insider_utility;
  return PowerUtility(fmt::format("{}-insider {}", r.insiders, r.name),
                      [fn, n](double rho) { return n * fn(rho / n); }, r.rho_bar);
}

PowerUtility u_from_convex_cost(const CostProfile& c) {
  if (!c.cost) throw PreconditionError("cost profile has no cost function");
  const auto slope = check_shape(c.cost, 0.0, c.rho_bar);
  if (!slope.increasing)
    throw PreconditionError("governance cost must have c' > 0: " + slope.diagnostic);
  const RealFn cost = c.cost;
  const auto curvature =
      check_shape([cost](double r) { return -cost(r); }, 0.0, c.rho_bar);
  if (!curvature.strictly_concave)
    throw PreconditionError("governance cost must have c'' > 0");
  return PowerUtility("rho - c(rho)", [cost](double r) { return r - cost(r); },
                      c.rho_bar);
}

PowerMap majority_premium_power(double rho_bar, double premium) {
  if (!(rho_bar > 0.0))
    throw PreconditionError(fmt::format("rho_bar {} must be positive", rho_bar));
  if (!(premium >= 0.0 && premium < rho_bar))
    throw PreconditionError(
        fmt::format("majority premium {} outside [0, {})", premium, rho_bar));
  const double slope = rho_bar - premium;
  return PowerMap(
      fmt::format("premium({:.17g},{:.17g})", rho_bar, premium), rho_bar,
      [rho_bar, premium, slope](double s) {
        if (s < 0.5) return slope * s;
        if (s > 0.5) return slope * s + premium;
        return 0.5 * rho_bar;
      },
      premium);
}

ReducedPayoff compose_nu(const PowerUtility& utility, const PowerMap& power,
                         bool normalize) {
  return ReducedPayoff::composed(utility, power, normalize);
}

ReducedPayoff nu_preset(const std::string& name) {
  if (name == "quadratic") {
    PowerUtility u("2r - r^2", [](double r) { return 2.0 * r - r * r; }, 1.0);
    return compose_nu(u, PowerMap::proportional(1.0));
  }
  if (name == "sqrt-sharing") {
    RentSharingProfile r{[](double z) { return std::sqrt(z); }, 4, 1.0, "sqrt"};
    return compose_nu(u_from_rent_sharing(r), PowerMap::proportional(1.0));
  }
  if (name == "placement-linear") {
    PlacementProfile p{[](double k) { return 1.0 - 0.5 * k; }, 1.0, 1.0};
    return compose_nu(u_from_placements(p), PowerMap::proportional(1.0));
  }
  if (name == "linear") return ReducedPayoff::direct("s", [](double s) { return s; });
  throw PreconditionError(fmt::format("unknown nu preset '{}'", name));
}

const std::vector<std::string>& nu_preset_names() {
  static const std::vector<std::string> names{"quadratic", "sqrt-sharing",
                                              "placement-linear", "linear"};
  return names;
}

}  // namespace polarity
